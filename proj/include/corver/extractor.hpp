#pragma once

#include <corver/triplet.hpp>

#include <nlohmann/json.hpp>

#include <cerrno>
#include <csignal>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace corver {

struct ExtractorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Seam for the triplet-extraction model.
class Extractor {
 public:
  virtual ~Extractor() = default;

  /// Returns one output per sentence, in input order.
  virtual std::vector<ExtractorOutput> extract_batch(const std::vector<std::string>& sentences) = 0;

  ExtractorOutput extract(const std::string& sentence) {
    return std::move(extract_batch({sentence}).front());
  }
};

/// Replays recorded extractor emissions from a sentence -> raw lookup. Unknown
/// sentences yield "[]".
class StubExtractor final : public Extractor {
 public:
  StubExtractor() = default;
  explicit StubExtractor(std::unordered_map<std::string, std::string> table)
      : table_(std::move(table)) {}

  /// JSONL of {"sentence": str, "raw": str}.
  static StubExtractor from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open extractor stub file: " + path);
    std::unordered_map<std::string, std::string> table;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        table.insert_or_assign(j.at("sentence").get<std::string>(), j.at("raw").get<std::string>());
      } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
    return StubExtractor(std::move(table));
  }

  void add(std::string sentence, std::string raw) {
    table_.insert_or_assign(std::move(sentence), std::move(raw));
  }

  std::vector<ExtractorOutput> extract_batch(const std::vector<std::string>& sentences) override {
    std::vector<ExtractorOutput> out;
    out.reserve(sentences.size());
    for (const auto& s : sentences) {
      auto it = table_.find(s);
      out.push_back(parse_extractor_output(it == table_.end() ? std::string_view("[]") : it->second));
    }
    return out;
  }

  size_t size() const { return table_.size(); }

 private:
  std::unordered_map<std::string, std::string> table_;
};

/// Runs a user-supplied extractor command (via /bin/sh -c). Line protocol:
/// one sentence per line on the child's stdin, one raw emission per line on
/// its stdout, same order. Calls are serialized.
class ProcessExtractor final : public Extractor {
 public:
  explicit ProcessExtractor(std::string command) : command_(std::move(command)) {
    std::signal(SIGPIPE, SIG_IGN);
    int in_pipe[2], out_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0 || ::pipe2(out_pipe, O_CLOEXEC) != 0)
      throw ExtractorError(std::string("pipe failed: ") + std::strerror(errno));
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
    const char* argv[] = {"/bin/sh", "-c", command_.c_str(), nullptr};
    const int rc = posix_spawn(&pid_, "/bin/sh", &actions, nullptr, const_cast<char**>(argv), environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    if (rc != 0) {
      ::close(in_pipe[1]);
      ::close(out_pipe[0]);
      throw ExtractorError("cannot start extractor command '" + command_ + "': " + std::strerror(rc));
    }
    to_child_ = in_pipe[1];
    from_child_ = ::fdopen(out_pipe[0], "r");
  }

  ProcessExtractor(const ProcessExtractor&) = delete;
  ProcessExtractor& operator=(const ProcessExtractor&) = delete;

  ~ProcessExtractor() override {
    if (to_child_ >= 0) ::close(to_child_);
    if (from_child_) std::fclose(from_child_);
    if (pid_ > 0) {
      int status = 0;
      ::waitpid(pid_, &status, 0);
    }
  }

  std::vector<ExtractorOutput> extract_batch(const std::vector<std::string>& sentences) override {
    std::lock_guard lock(mu_);
    if (broken_) throw ExtractorError("extractor process is no longer usable");

    std::string payload;
    for (const auto& s : sentences) {
      std::string line = s;
      for (char& c : line)
        if (c == '\n' || c == '\r') c = ' ';
      payload += line;
      payload += '\n';
    }
    bool write_ok = true;
    std::thread writer([&] {
      size_t off = 0;
      while (off < payload.size()) {
        const ssize_t w = ::write(to_child_, payload.data() + off, payload.size() - off);
        if (w < 0 && errno == EINTR) continue;
        if (w <= 0) {
          write_ok = false;
          return;
        }
        off += static_cast<size_t>(w);
      }
    });

    std::vector<ExtractorOutput> out;
    out.reserve(sentences.size());
    char* buf = nullptr;
    size_t cap = 0;
    for (size_t k = 0; k < sentences.size(); ++k) {
      const ssize_t n = ::getline(&buf, &cap, from_child_);
      if (n < 0) break;
      std::string_view line(buf, static_cast<size_t>(n));
      while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
      out.push_back(parse_extractor_output(line));
    }
    std::free(buf);
    writer.join();
    if (!write_ok || out.size() != sentences.size()) {
      broken_ = true;
      throw ExtractorError("extractor command '" + command_ + "' returned " +
                           std::to_string(out.size()) + " lines for " +
                           std::to_string(sentences.size()) + " sentences");
    }
    return out;
  }

 private:
  std::string command_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  FILE* from_child_ = nullptr;
  std::mutex mu_;
  bool broken_ = false;
};

}  // namespace corver
