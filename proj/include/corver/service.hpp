#pragma once

// Newline-delimited JSON request handling and its transports: a Unix-domain
// socket server with a worker pool, and an optional HTTP endpoint.

#include <corver/engine.hpp>
#include <corver/json_io.hpp>

#include <atomic>
#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

namespace corver {

inline constexpr int kProtocolVersion = 1;

struct ParsedGroup {
  std::string prompt_id;
  std::vector<Completion> completions;
  std::vector<GoldAnswers> golds;
};

/// {"prompt_id", "completions": [{text, token_spans, mask, gold}], "gold"?}.
/// A group-level "gold" applies to completions without their own.
inline ParsedGroup group_from_json(const json& j) {
  ParsedGroup g;
  g.prompt_id = detail::get_as<std::string>(detail::require(j, "prompt_id", "group"), "group.prompt_id");
  const json& cs = detail::require(j, "completions", "group");
  if (!cs.is_array()) throw InputError("group.completions: expected an array");
  for (size_t k = 0; k < cs.size(); ++k) {
    const std::string where = "group.completions[" + std::to_string(k) + "]";
    g.completions.push_back(completion_from_json(cs[k], where));
    if (cs[k].contains("gold")) g.golds.push_back(gold_from_json(cs[k]["gold"], where + ".gold"));
    else if (j.contains("gold")) g.golds.push_back(gold_from_json(j["gold"], "group.gold"));
    else throw InputError(where + ": missing field 'gold'");
  }
  return g;
}

inline json group_to_json(const std::string& prompt_id, const GroupResult& r) {
  json diag = json::array();
  for (const auto& c : r.completions) diag.push_back(diagnostics_json(c));
  json out = to_json(r.advantages);
  out["prompt_id"] = prompt_id;
  out["diagnostics"] = std::move(diag);
  return out;
}

inline json scoring_error_json(const ScoringError& e) {
  json s = json::array();
  for (const auto& se : e.sentences) s.push_back({{"sentence_index", se.sentence_index}, {"error", se.message}});
  return {{"code", "scoring_error"}, {"message", e.what()}, {"sentences", std::move(s)}};
}

/// Maps one request line to one response line. Stateless and deterministic
/// per request; safe to call concurrently.
class RequestHandler {
 public:
  explicit RequestHandler(const Engine& engine) : engine_(&engine) {}

  std::string handle(std::string_view line) const { return handle_json(line).dump(); }

  json handle_json(std::string_view line) const {
    json req;
    try {
      req = json::parse(line);
    } catch (const json::exception& e) {
      return error(nullptr, nullptr, "parse_error", e.what());
    }
    if (!req.is_object()) return error(nullptr, nullptr, "invalid_request", "request must be a JSON object");
    const json id = req.contains("id") ? req["id"] : json(nullptr);
    const json kind = req.contains("kind") ? req["kind"] : json(nullptr);
    if (id.is_null()) return error(id, kind, "invalid_request", "missing field 'id'");
    if (!kind.is_string()) return error(id, kind, "invalid_request", "missing or non-string field 'kind'");

    try {
      const std::string k = kind.get<std::string>();
      if (k == "health") return ok(id, kind, health());
      if (k == "count") return ok(id, kind, count(req));
      if (k == "score_completion") return ok(id, kind, score_completion(req));
      if (k == "score_group") return ok(id, kind, score_group(req));
      return error(id, kind, "unknown_kind", "unknown request kind '" + k + "'");
    } catch (const ScoringError& e) {
      json r{{"id", id}, {"kind", kind}, {"ok", false}, {"error", scoring_error_json(e)}};
      return r;
    } catch (const std::invalid_argument& e) {
      return error(id, kind, "invalid_request", e.what());
    } catch (const std::out_of_range& e) {
      return error(id, kind, "invalid_request", e.what());
    } catch (const std::exception& e) {
      return error(id, kind, "internal_error", e.what());
    }
  }

  json health() const {
    return {{"status", "ok"}, {"index_tokens", engine_->index_tokens()}, {"protocol", kProtocolVersion}};
  }

 private:
  json count(const json& req) const {
    const auto words = detail::get_as<std::vector<std::string>>(detail::require(req, "words", "count"), "count.words");
    std::optional<uint64_t> window;
    if (req.contains("window")) window = detail::get_as<uint64_t>(req["window"], "count.window");
    return to_json(engine_->count(words, window));
  }

  json score_completion(const json& req) const {
    const json& c = detail::require(req, "completion", "score_completion");
    const Completion completion = completion_from_json(c, "completion");
    const GoldAnswers gold = gold_from_json(detail::require(c, "gold", "completion"), "completion.gold");
    return to_json(engine_->score_completion(completion, gold), completion.text);
  }

  json score_group(const json& req) const {
    const ParsedGroup g = group_from_json(req);
    return group_to_json(g.prompt_id, engine_->score_group(g.completions, g.golds));
  }

  static json ok(const json& id, const json& kind, json result) {
    return {{"id", id}, {"kind", kind}, {"ok", true}, {"result", std::move(result)}};
  }

  static json error(const json& id, const json& kind, const char* code, const std::string& message) {
    return {{"id", id}, {"kind", kind}, {"ok", false}, {"error", {{"code", code}, {"message", message}}}};
  }

  const Engine* engine_;
};

/// Fixed-size FIFO worker pool.
class WorkerPool {
 public:
  explicit WorkerPool(size_t threads) {
    if (threads == 0) threads = 1;
    for (size_t i = 0; i < threads; ++i) workers_.emplace_back([this] { run(); });
  }

  ~WorkerPool() {
    {
      std::lock_guard lock(mu_);
      stopping_ = true;
    }
    cv_.notify_all();
    for (auto& w : workers_) w.join();
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  void submit(std::function<void()> job) {
    {
      std::lock_guard lock(mu_);
      jobs_.push_back(std::move(job));
    }
    cv_.notify_one();
  }

 private:
  void run() {
    for (;;) {
      std::function<void()> job;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return stopping_ || !jobs_.empty(); });
        if (jobs_.empty()) return;
        job = std::move(jobs_.front());
        jobs_.pop_front();
      }
      job();
    }
  }

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> jobs_;
  bool stopping_ = false;
  std::vector<std::thread> workers_;
};

/// Unix-domain stream socket server. Each connection sends request lines and
/// receives one response line per request, in completion order.
class SocketServer {
 public:
  SocketServer(const RequestHandler& handler, std::string path, size_t threads)
      : handler_(&handler), path_(std::move(path)), pool_(threads) {
    sockaddr_un addr{};
    if (path_.size() >= sizeof(addr.sun_path)) throw std::invalid_argument("socket path too long: " + path_);
    listen_fd_ = ::socket(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (listen_fd_ < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
    addr.sun_family = AF_UNIX;
    std::memcpy(addr.sun_path, path_.c_str(), path_.size() + 1);
    ::unlink(path_.c_str());
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
        ::listen(listen_fd_, 64) != 0) {
      const std::string msg = std::strerror(errno);
      ::close(listen_fd_);
      throw std::runtime_error("cannot listen on " + path_ + ": " + msg);
    }
  }

  ~SocketServer() {
    stop();
    std::vector<std::shared_ptr<Connection>> conns;
    {
      std::lock_guard lock(conn_mu_);
      conns.swap(connections_);
    }
    for (auto& c : conns) ::shutdown(c->fd, SHUT_RDWR);
    for (auto& t : readers_) t.join();
    ::close(listen_fd_);
    ::unlink(path_.c_str());
  }

  SocketServer(const SocketServer&) = delete;
  SocketServer& operator=(const SocketServer&) = delete;

  const std::string& path() const { return path_; }

  void stop() { stopping_ = true; }

  /// Accepts connections until stop() is called or `should_stop` returns true.
  void run(const std::function<bool()>& should_stop = {}) {
    while (!stopping_ && !(should_stop && should_stop())) {
      pollfd p{listen_fd_, POLLIN, 0};
      const int rc = ::poll(&p, 1, 100);
      if (rc <= 0) continue;
      const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
      if (fd < 0) continue;
      auto conn = std::make_shared<Connection>(fd);
      {
        std::lock_guard lock(conn_mu_);
        connections_.push_back(conn);
      }
      readers_.emplace_back([this, conn] { serve_connection(conn); });
    }
  }

 private:
  struct Connection {
    explicit Connection(int f) : fd(f) {}
    ~Connection() { ::close(fd); }
    int fd;
    std::mutex write_mu;
    std::atomic<bool> broken{false};

    void send_line(const std::string& s) {
      std::lock_guard lock(write_mu);
      if (broken) return;
      std::string buf = s + "\n";
      size_t off = 0;
      while (off < buf.size()) {
        const ssize_t n = ::send(fd, buf.data() + off, buf.size() - off, MSG_NOSIGNAL);
        if (n <= 0) {
          if (n < 0 && errno == EINTR) continue;
          broken = true;
          return;
        }
        off += static_cast<size_t>(n);
      }
    }
  };

  void serve_connection(const std::shared_ptr<Connection>& conn) {
    std::string buffer;
    char chunk[65536];
    for (;;) {
      const ssize_t n = ::recv(conn->fd, chunk, sizeof(chunk), 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) break;
      buffer.append(chunk, static_cast<size_t>(n));
      size_t start = 0;
      for (size_t nl; (nl = buffer.find('\n', start)) != std::string::npos; start = nl + 1) {
        std::string line = buffer.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        pool_.submit([this, conn, line = std::move(line)] { conn->send_line(handler_->handle(line)); });
      }
      buffer.erase(0, start);
    }
    std::lock_guard lock(conn_mu_);
    std::erase(connections_, conn);
  }

  const RequestHandler* handler_;
  std::string path_;
  int listen_fd_ = -1;
  std::atomic<bool> stopping_{false};
  std::mutex conn_mu_;
  std::vector<std::shared_ptr<Connection>> connections_;
  std::vector<std::thread> readers_;
  WorkerPool pool_;
};

}  // namespace corver
