#!/usr/bin/env python3
"""Wire-protocol conformance: drives `corver serve` over its Unix socket and
HTTP endpoint and validates every request and response against schemas/v1."""

import json
import os
import signal
import socket
import subprocess
import sys
import tempfile
import time
import urllib.request

import jsonschema

CLI, SCHEMAS = sys.argv[1], sys.argv[2]
req_schema = json.load(open(os.path.join(SCHEMAS, "request.schema.json")))
resp_schema = json.load(open(os.path.join(SCHEMAS, "response.schema.json")))
validate_req = jsonschema.Draft202012Validator(req_schema)
validate_resp = jsonschema.Draft202012Validator(resp_schema)

DOCS = [
    "The Philadelphia Flyers won the Stanley Cup in 1975 after beating Buffalo.",
    "In 1975 the Stanley Cup went to the Philadelphia Flyers for the second time.",
    "Boston played Buffalo in a long series that spring.",
]
STUB = {
    "The Philadelphia Flyers won the Stanley Cup in 1975.": [["Philadelphia Flyers", "won", "Stanley Cup"]],
    "Boston won the Stanley Cup that year.": [["Boston", "won", "Stanley Cup"]],
    "Buffalo played Boston.": [["Buffalo", "played", "Boston"]],
}


def spans(text):
    """Whitespace-attached word pieces as [start, end) code-point offsets."""
    out, i = [], 0
    while i < len(text):
        j = i
        while j < len(text) and text[j].isspace():
            j += 1
        k = j + 1
        while k < len(text) and (text[k].isalnum() == text[j].isalnum()) and not text[k].isspace():
            k += 1
        out.append([i, min(k, len(text))])
        i = min(k, len(text))
    return out


def completion(think, answer, **extra):
    text = f"<think>{think}</think>\n<answer>{answer}</answer>"
    return {"text": text, "token_spans": spans(text), **extra}


GOOD = completion("The Philadelphia Flyers won the Stanley Cup in 1975. Buffalo played Boston.", "1975")
BAD = completion("Boston won the Stanley Cup that year.", "1974")

VALID = [
    {"id": 1, "kind": "health"},
    {"id": "c", "kind": "count", "words": ["Stanley", "Cup"]},
    {"id": 3, "kind": "count", "words": ["Stanley Cup", "Philadelphia"], "window": 5},
    {"id": 4, "kind": "score_completion", "completion": {**GOOD, "gold": {"answer": "1975"}}},
    {"id": 5, "kind": "score_completion", "completion": {**BAD, "gold": {"answers": ["1975", "nineteen seventy-five"]}}},
    {"id": 6, "kind": "score_group", "prompt_id": "p", "gold": {"answer": "1975"}, "completions": [GOOD, BAD, GOOD]},
    {"id": 7, "kind": "score_group", "prompt_id": "same", "gold": {"answer": "1975"}, "completions": [GOOD, GOOD]},
    {"id": 8, "kind": "score_group", "prompt_id": "pad", "completions": [
        {**GOOD, "token_spans": GOOD["token_spans"] + [[len(GOOD["text"])] * 2],
         "mask": [1] * len(GOOD["token_spans"]) + [0], "gold": {"answer": "1975"}},
        {**BAD, "gold": {"answer": "1975"}}]},
]
INVALID = [
    {"kind": "health"},
    {"id": 10, "kind": "launch"},
    {"id": 11, "kind": "count"},
    {"id": 12, "kind": "count", "words": []},
    {"id": 13, "kind": "count", "words": ["a"], "window": 0},
    {"id": 14, "kind": "score_completion", "completion": {"text": "x", "token_spans": []}},
    {"id": 15, "kind": "score_group", "prompt_id": "p", "completions": [{"text": "x", "token_spans": [[0, 1]]}]},
]

failures = []


def check(cond, msg):
    if not cond:
        failures.append(msg)


def errors(validator, doc):
    return [f"{'/'.join(map(str, e.absolute_path))}: {e.message}" for e in validator.iter_errors(doc)]


def exchange(sock_path, lines):
    s = socket.socket(socket.AF_UNIX, socket.SOCK_STREAM)
    for _ in range(200):
        try:
            s.connect(sock_path)
            break
        except OSError:
            time.sleep(0.025)
    s.sendall("".join(l + "\n" for l in lines).encode())
    buf, out = b"", []
    while len(out) < len(lines):
        chunk = s.recv(65536)
        if not chunk:
            break
        buf += chunk
        while b"\n" in buf:
            line, buf = buf.split(b"\n", 1)
            out.append(line.decode())
    s.close()
    return out


with tempfile.TemporaryDirectory() as d:
    with open(os.path.join(d, "corpus.jsonl"), "w") as f:
        for doc in DOCS:
            f.write(json.dumps({"text": doc}) + "\n")
    with open(os.path.join(d, "stub.jsonl"), "w") as f:
        for s, t in STUB.items():
            f.write(json.dumps({"sentence": s, "raw": json.dumps(t)}) + "\n")
    subprocess.run([CLI, "index", "build", "--corpus", os.path.join(d, "corpus.jsonl"),
                    "--out", os.path.join(d, "toy.cvix"), "--window", "64"],
                   check=True, stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
    cfg = os.path.join(d, "config.json")
    json.dump({"index_path": "toy.cvix", "window": 64, "extractor": {"stub": "stub.jsonl"}}, open(cfg, "w"))
    broken_cfg = os.path.join(d, "broken.json")
    json.dump({"index_path": "toy.cvix", "extractor": {"command": "/bin/false"}}, open(broken_cfg, "w"))

    for r in VALID:
        e = errors(validate_req, r)
        check(not e, f"valid request {r['id']} rejected by schema: {e}")
    for r in INVALID:
        check(errors(validate_req, r), f"invalid request {r} accepted by schema")

    def run(config, lines, http=False):
        sock = os.path.join(d, "s.sock")
        argv = [CLI, "serve", "--config", config, "--socket", sock]
        port = None
        if http:
            with socket.socket() as probe:
                probe.bind(("127.0.0.1", 0))
                port = probe.getsockname()[1]
            argv += ["--http", f"127.0.0.1:{port}"]
        proc = subprocess.Popen(argv, stderr=subprocess.DEVNULL)
        try:
            got = exchange(sock, lines)
            http_body = None
            if http:
                for _ in range(200):
                    try:
                        body = "".join(l + "\n" for l in lines).encode()
                        rq = urllib.request.Request(f"http://127.0.0.1:{port}/v1/requests", data=body, method="POST")
                        http_body = urllib.request.urlopen(rq, timeout=10).read().decode()
                        health = json.loads(urllib.request.urlopen(f"http://127.0.0.1:{port}/v1/health").read())
                        check(health["status"] == "ok", "http health not ok")
                        break
                    except OSError:
                        time.sleep(0.025)
            return got, http_body
        finally:
            proc.send_signal(signal.SIGINT)
            check(proc.wait(timeout=30) == 0, "serve did not exit cleanly")

    lines = [json.dumps(r) for r in VALID + INVALID] + ["{broken"]
    got, http_body = run(cfg, lines, http=True)
    check(len(got) == len(lines), f"expected {len(lines)} responses, got {len(got)}")
    by_id = {}
    for line in got:
        resp = json.loads(line)
        e = errors(validate_resp, resp)
        check(not e, f"response fails schema: {e}\n  {line[:200]}")
        by_id[json.dumps(resp["id"])] = resp
    for r in VALID:
        resp = by_id.get(json.dumps(r["id"]))
        check(resp is not None and resp["ok"], f"request {r['id']} not ok: {resp}")
    for r in INVALID:
        resp = by_id.get(json.dumps(r.get("id")))
        check(resp is not None and not resp["ok"], f"invalid request {r} answered ok")
    check(by_id["7"]["result"]["advantages"] == [[0.0] * len(GOOD["token_spans"])] * 2,
          "identical group advantages not all zero")
    check(by_id['"c"']["result"]["count"] == 2, "Stanley AND Cup count is not 2")

    # HTTP answers in request order with the same bytes as the socket.
    http_lines = http_body.splitlines() if http_body else []
    check(sorted(http_lines) == sorted(got), "HTTP and socket responses differ")
    check([json.loads(l)["id"] for l in http_lines[:len(VALID)]] == [r["id"] for r in VALID],
          "HTTP responses out of order")

    got, _ = run(broken_cfg, [json.dumps(VALID[3])])
    resp = json.loads(got[0]) if got else {}
    check(resp.get("error", {}).get("code") == "scoring_error", f"expected scoring_error, got {resp}")
    check(not errors(validate_resp, resp), "scoring_error response fails schema")

for f in failures:
    print("FAIL:", f)
print(f"{len(VALID) + len(INVALID)} request cases, {len(failures)} failure(s)")
sys.exit(1 if failures else 0)
