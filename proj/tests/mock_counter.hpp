#pragma once

// In-memory CoocCounter: counts keyed by the set of query words; unknown sets
// count zero. Records every query it answers.

#include <corver/reward.hpp>

#include <map>
#include <set>
#include <string>
#include <vector>

namespace mock {

class MapCounter final : public corver::CoocCounter {
 public:
  void set(std::vector<std::string> words, uint64_t c) { table_[key(std::move(words))] = c; }

  corver::CnfCount count(const corver::WordQuery& q, uint64_t, std::optional<uint64_t>) const override {
    ++calls;
    queries.push_back(q.words);
    auto it = table_.find(key(q.words));
    return corver::CnfCount{it == table_.end() ? 0 : it->second, false, 0};
  }

  mutable size_t calls = 0;
  mutable std::vector<std::vector<std::string>> queries;

 private:
  static std::set<std::string> key(std::vector<std::string> w) { return {w.begin(), w.end()}; }
  std::map<std::set<std::string>, uint64_t> table_;
};

}  // namespace mock
