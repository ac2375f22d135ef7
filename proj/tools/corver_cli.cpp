// corver command-line front end. JSONL results go to stdout, logs to stderr.
// Exit status: 0 success, 1 input error, 2 internal error.

#include <corver/corver.hpp>
#include <corver/http_service.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace {

using corver::json;

volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }

void log(const std::string& msg) { std::cerr << "corver: " << msg << '\n'; }

void emit(const json& j) { std::cout << j.dump() << '\n'; }

/// Calls `fn(line_json, where)` for each non-blank line.
template <class Fn>
void for_each_jsonl(const std::string& path, Fn fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw corver::InputError("cannot open " + path);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw corver::InputError(where + ": " + e.what());
    }
    fn(j, where);
  }
}

std::vector<std::string> split_query(const std::string& q) {
  std::vector<std::string> parts;
  size_t pos = 0;
  for (;;) {
    const size_t at = q.find(" AND ", pos);
    const std::string part = corver::unicode::trim(std::string_view(q).substr(pos, at - pos));
    if (part.empty()) throw corver::InputError("empty clause in query: \"" + q + "\"");
    parts.push_back(part);
    if (at == std::string::npos) break;
    pos = at + 5;
  }
  return parts;
}

std::vector<uint64_t> parse_cuts(const std::string& s) {
  std::vector<uint64_t> cuts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = corver::unicode::trim(item);
    if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos)
      throw corver::InputError("bad bucket bound '" + item + "' in --buckets");
    cuts.push_back(std::stoull(item));
  }
  if (cuts.empty()) throw corver::InputError("--buckets needs at least one bound");
  return cuts;
}

int cmd_index_build(const std::vector<std::string>& corpus, const std::string& out, uint64_t window,
                    uint64_t max_freq, bool lowercase) {
  corver::CorpusBuilder builder{corver::WordTokenizer(lowercase)};
  for (const auto& p : corpus) builder.add_file(p);
  corver::IndexParams params;
  params.max_clause_dist = window;
  params.max_clause_freq = max_freq;
  const auto t0 = std::chrono::steady_clock::now();
  const auto index = corver::TextIndex::build(builder, params);
  index.save(out);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  log("built " + out + " in " + std::to_string(secs) + " s");
  emit({{"index", out},
        {"tokens", index.index().size()},
        {"docs", index.index().doc_count()},
        {"vocab_size", index.vocabulary().size()},
        {"token_width", index.index().token_width()},
        {"tokenizer", index.tokenizer().id()}});
  return 0;
}

int cmd_index_count(const std::string& path, const std::string& query, std::optional<uint64_t> window) {
  const auto index = corver::TextIndex::load(path);
  const corver::IndexCounter counter(index);
  const uint64_t w = window.value_or(index.index().params().max_clause_dist);
  if (w < 1 || w > index.index().params().max_clause_dist)
    throw corver::InputError("--window must lie in [1, " +
                             std::to_string(index.index().params().max_clause_dist) + "]");
  corver::WordQuery q{split_query(query), corver::WordQuery::Source::HeadTail};
  json out = corver::to_json(counter.count(q, w));
  out["query"] = q.words;
  out["window"] = w;
  emit(out);
  return 0;
}

int cmd_score(const std::string& config, const std::string& in) {
  const corver::Engine engine(corver::EngineConfig::resolve(config));
  for_each_jsonl(in, [&](const json& j, const std::string& where) {
    const auto completion = corver::completion_from_json(j, where);
    const auto gold = corver::gold_from_json(corver::detail::require(j, "gold", where), where + ".gold");
    json out = corver::to_json(engine.score_completion(completion, gold), completion.text);
    if (j.contains("id")) out["id"] = j["id"];
    emit(out);
  });
  return 0;
}

int cmd_advantages(const std::string& config, const std::string& in) {
  const corver::Engine engine(corver::EngineConfig::resolve(config));
  for_each_jsonl(in, [&](const json& j, const std::string& where) {
    corver::ParsedGroup g;
    try {
      g = corver::group_from_json(j);
    } catch (const corver::InputError& e) {
      throw corver::InputError(where + ": " + e.what());
    }
    emit(corver::group_to_json(g.prompt_id, engine.score_group(g.completions, g.golds)));
  });
  return 0;
}

int cmd_filter(const std::string& grades, int low, std::optional<int> high, size_t anchors,
               uint64_t seed, bool summary) {
  std::vector<corver::QuestionStats> stats;
  for_each_jsonl(grades, [&](const json& j, const std::string& where) {
    stats.push_back(corver::question_stats_from_json(j, where));
  });
  const auto kept = corver::learning_zone_filter(stats, low, high);
  const auto mastered = corver::mastered_questions(stats);
  const auto pool = corver::mix_anchors(kept, mastered, anchors, seed);
  if (summary) {
    json s = corver::to_json(corver::zone_summary(stats));
    s["kept"] = kept.size();
    s["anchors"] = anchors;
    s["pool"] = pool.size();
    emit({{"summary", s}});
    return 0;
  }
  for (size_t i = 0; i < pool.size(); ++i)
    emit({{"question_id", pool[i]}, {"anchor", i >= kept.size()}});
  return 0;
}

int cmd_calibrate(const std::string& in, const std::string& buckets) {
  std::vector<corver::CalibrationRecord> records;
  for_each_jsonl(in, [&](const json& j, const std::string& where) {
    records.push_back(corver::calibration_record_from_json(j, where));
  });
  const auto report = corver::calibrate(records, corver::buckets_from_cuts(parse_cuts(buckets)));
  if (report.skipped > 0) log("skipped " + std::to_string(report.skipped) + " unlabeled record(s)");
  for (const auto& b : report.buckets) emit(corver::to_json(b));
  return 0;
}

int cmd_serve(const std::string& config, const std::string& socket_path, const std::string& http,
              size_t threads) {
  const corver::Engine engine(corver::EngineConfig::resolve(config));
  const corver::RequestHandler handler(engine);
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::signal(SIGPIPE, SIG_IGN);

  std::unique_ptr<corver::HttpServer> http_server;
  std::thread http_thread;
  if (!http.empty()) {
    const size_t colon = http.rfind(':');
    if (colon == std::string::npos) throw corver::InputError("--http expects host:port");
    const std::string host = http.substr(0, colon);
    const int port = std::stoi(http.substr(colon + 1));
    http_server = std::make_unique<corver::HttpServer>(handler);
    http_thread = std::thread([&, host, port] {
      if (!http_server->listen(host, port)) log("http listen failed on " + http);
    });
    log("http listening on " + http);
  }

  {
    corver::SocketServer server(handler, socket_path, threads);
    log("listening on " + socket_path + " (" + std::to_string(engine.index_tokens()) + " index tokens)");
    server.run([] { return g_stop != 0; });
  }
  if (http_server) {
    http_server->stop();
    http_thread.join();
  }
  log("stopped");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"corver: co-occurrence reward engine"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  auto* index = app.add_subcommand("index", "build or query a corpus index");
  index->require_subcommand(1);

  std::vector<std::string> corpus;
  std::string out;
  uint64_t window_build = 1000, max_freq = 500000;
  bool lowercase = false;
  auto* build = index->add_subcommand("build", "index a text or JSONL corpus");
  build->add_option("--corpus", corpus, "corpus file(s): .jsonl {\"text\"} lines or blank-line separated text")
      ->required()
      ->check(CLI::ExistingFile);
  build->add_option("--out", out, "index output path")->required();
  build->add_option("--window", window_build, "maximum co-occurrence window")->check(CLI::PositiveNumber);
  build->add_option("--max-clause-freq", max_freq, "anchor scan cap")->check(CLI::PositiveNumber);
  build->add_flag("--lowercase", lowercase, "case-fold tokens");

  std::string index_path, query;
  std::optional<uint64_t> window_count;
  auto* count = index->add_subcommand("count", "count a CNF query");
  count->add_option("--index", index_path, "index path")->required()->check(CLI::ExistingFile);
  count->add_option("--query", query, "clauses joined by ' AND '")->required();
  count->add_option("--window", window_count, "window in tokens");

  std::string config, in;
  auto* score = app.add_subcommand("score", "score completions (JSONL)");
  score->add_option("--config", config, "engine config (JSON); defaults to $CORVER_CONFIG");
  score->add_option("--in", in, "completions JSONL")->required()->check(CLI::ExistingFile);

  auto* adv = app.add_subcommand("advantages", "group advantages (JSONL, one group per line)");
  adv->add_option("--config", config, "engine config (JSON); defaults to $CORVER_CONFIG");
  adv->add_option("--in", in, "groups JSONL")->required()->check(CLI::ExistingFile);

  std::string grades;
  int low = 1;
  std::optional<int> high;
  size_t anchors = 0;
  uint64_t seed = 0;
  bool summary = false;
  auto* filter = app.add_subcommand("filter", "learning-zone filter with anchor mixing");
  filter->add_option("--grades", grades, "grades JSONL")->required()->check(CLI::ExistingFile);
  filter->add_option("--low", low, "lowest n_correct kept");
  filter->add_option("--high", high, "highest n_correct kept (default G-1)");
  filter->add_option("--anchors", anchors, "mastered questions to mix in");
  filter->add_option("--seed", seed, "anchor sampling seed");
  filter->add_flag("--summary", summary, "print zone counts instead of ids");

  std::string buckets = "0,5,10,20";
  auto* calib = app.add_subcommand("calibrate", "precision per count bucket with Wilson intervals");
  calib->add_option("--in", in, "records JSONL {count, correct}")->required()->check(CLI::ExistingFile);
  calib->add_option("--buckets", buckets, "bucket cut points");

  std::string socket_path, http;
  size_t threads = std::max(1u, std::thread::hardware_concurrency());
  auto* serve = app.add_subcommand("serve", "NDJSON scoring service");
  serve->add_option("--config", config, "engine config (JSON); defaults to $CORVER_CONFIG");
  serve->add_option("--socket", socket_path, "Unix socket path")->required();
  serve->add_option("--http", http, "also serve HTTP on host:port");
  serve->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*build) return cmd_index_build(corpus, out, window_build, max_freq, lowercase);
    if (*count) return cmd_index_count(index_path, query, window_count);
    if (*score) return cmd_score(config, in);
    if (*adv) return cmd_advantages(config, in);
    if (*filter) return cmd_filter(grades, low, high, anchors, seed, summary);
    if (*calib) return cmd_calibrate(in, buckets);
    if (*serve) return cmd_serve(config, socket_path, http, threads);
  } catch (const corver::ScoringError& e) {
    log(std::string("scoring error: ") + e.what());
    return 2;
  } catch (const corver::ConfigError& e) {
    log(e.what());
    return 1;
  } catch (const corver::IndexFileError& e) {
    log(e.what());
    return 1;
  } catch (const corver::IndexBuildError& e) {
    log(e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    log(e.what());
    return 1;
  } catch (const std::exception& e) {
    log(std::string("internal error: ") + e.what());
    return 2;
  }
  return 1;
}
