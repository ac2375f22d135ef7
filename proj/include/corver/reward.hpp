#pragma once

// Sentence-level co-occurrence rewards: count -> reward mapping and the
// First / Min / RelCheck triplet-aggregation variants.

#include <corver/cooc_query.hpp>
#include <corver/corpus_index.hpp>
#include <corver/extractor.hpp>
#include <corver/text_index.hpp>
#include <corver/triplet.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace corver {

/// Piecewise-constant map from a co-occurrence count to a reward:
/// 0 -> alpha0, (0, tau1) -> alpha1, [tau1, tau2) -> alpha2, >= tau2 -> alpha3.
struct RewardMap {
  double alpha0 = -0.3;
  double alpha1 = -0.1;
  double alpha2 = 0.0;
  double alpha3 = 0.1;
  uint64_t tau1 = 5;
  uint64_t tau2 = 20;

  void validate() const {
    if (!(alpha0 < alpha1 && alpha1 <= alpha2 && alpha2 < alpha3))
      throw std::invalid_argument("reward map needs alpha0 < alpha1 <= alpha2 < alpha3");
    if (!(tau1 >= 1 && tau1 < tau2)) throw std::invalid_argument("reward map needs 1 <= tau1 < tau2");
  }

  static RewardMap with_zero_penalty(double alpha0) {
    RewardMap m;
    m.alpha0 = alpha0;
    m.validate();
    return m;
  }

  /// Zero-count penalties of the sensitivity sweep.
  static constexpr std::array<double, 5> kZeroPenaltySweep{-0.1, -0.2, -0.3, -0.5, -1.0};
};

inline double map_count(uint64_t c, const RewardMap& m) {
  if (c == 0) return m.alpha0;
  if (c < m.tau1) return m.alpha1;
  if (c < m.tau2) return m.alpha2;
  return m.alpha3;
}

/// No count (no valid triplet or query) is neutral.
inline double map_count(const std::optional<CnfCount>& c, const RewardMap& m) {
  return c ? map_count(c->count, m) : 0.0;
}

/// Source of co-occurrence counts for word queries.
class CoocCounter {
 public:
  virtual ~CoocCounter() = default;
  /// `at_least` lets the counter stop once that many matches are found.
  virtual CnfCount count(const WordQuery& query, uint64_t window,
                         std::optional<uint64_t> at_least = std::nullopt) const = 0;
};

/// Counts word queries against a TextIndex: each word becomes one phrase
/// clause under the index's tokenizer.
class IndexCounter final : public CoocCounter {
 public:
  explicit IndexCounter(const TextIndex& index) : index_(&index) {}

  CnfCount count(const WordQuery& query, uint64_t window,
                 std::optional<uint64_t> at_least = std::nullopt) const override {
    CnfQuery q;
    q.window = std::min(window, index_->index().params().max_clause_dist);
    for (size_t i = 0; i < query.words.size(); ++i) {
      auto clause = index_->clause(query.words[i]);
      if (!clause) return CnfCount{0, false, i};
      if (clause->empty()) continue;
      if (std::find(q.clauses.begin(), q.clauses.end(), *clause) == q.clauses.end())
        q.clauses.push_back(std::move(*clause));
    }
    if (q.clauses.empty()) return CnfCount{};
    if (q.clauses.size() == 1) return CnfCount{index_->index().clause_count(q.clauses[0]), false, 0};
    return at_least ? index_->index().count_at_least(q, *at_least)
                    : index_->index().cnf_count(q);
  }

 private:
  const TextIndex* index_;
};

enum class Variant { First, Min, RelCheck };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::First: return "first";
    case Variant::Min: return "min";
    case Variant::RelCheck: return "relcheck";
  }
  return "?";
}

inline Variant parse_variant(std::string_view s) {
  if (s == "first") return Variant::First;
  if (s == "min") return Variant::Min;
  if (s == "relcheck") return Variant::RelCheck;
  throw std::invalid_argument("unknown variant '" + std::string(s) + "' (first|min|relcheck)");
}

struct ScoringConfig {
  RewardMap map;
  Variant variant = Variant::First;
  uint64_t window = 1000;
  double relcheck_demotion = -0.05;
  /// Stop counting once the top bucket is reached. Rewards are unchanged but
  /// reported counts saturate at tau2.
  bool early_exit = false;
};

struct SentenceScore {
  size_t sentence_index = 0;
  std::optional<Triplet> triplet;
  std::optional<WordQuery> query;
  std::optional<CnfCount> count;
  double reward = 0.0;
  Variant variant = Variant::First;
  bool relcheck_demoted = false;
  std::string stage = "no_triplet";  // no_triplet | no_query | counted
  size_t queries_issued = 0;
  std::vector<uint64_t> triplet_counts;    // Min: one per queried triplet
  std::optional<CnfCount> relation_count;  // RelCheck second query
};

class SentenceScorer {
 public:
  SentenceScorer(const CoocCounter& counter, const StopWordList& stops, ScoringConfig config)
      : counter_(&counter), stops_(&stops), config_(config) {
    config_.map.validate();
    if (config_.window < 1) throw std::invalid_argument("window must be >= 1");
  }
  SentenceScorer(const CoocCounter&&, const StopWordList&, ScoringConfig) = delete;
  SentenceScorer(const CoocCounter&, const StopWordList&&, ScoringConfig) = delete;

  const ScoringConfig& config() const { return config_; }

  SentenceScore score(size_t index, const ExtractorOutput& extracted) const {
    switch (config_.variant) {
      case Variant::First: return score_first(index, extracted);
      case Variant::Min: return score_min(index, extracted);
      case Variant::RelCheck: return score_relcheck(index, extracted);
    }
    throw std::logic_error("unreachable variant");
  }

  SentenceScore score(size_t index, const std::string& sentence, Extractor& extractor) const {
    return score(index, extractor.extract(sentence));
  }

  /// First valid triplet -> entity query -> count -> reward.
  SentenceScore score_first(size_t index, const ExtractorOutput& extracted) const {
    SentenceScore s = make(index, Variant::First);
    s.triplet = first_valid_triplet(extracted);
    if (!s.triplet) return s;
    s.query = build_entity_query(s.triplet->head, s.triplet->tail, *stops_);
    if (!s.query) {
      s.stage = "no_query";
      return s;
    }
    s.count = query(*s.query, s);
    s.stage = "counted";
    s.reward = map_count(s.count, config_.map);
    return s;
  }

  /// Minimum count over every valid triplet that yields a query. A triplet
  /// without a query is neutral, so it caps the reward at zero.
  SentenceScore score_min(size_t index, const ExtractorOutput& extracted) const {
    SentenceScore s = make(index, Variant::Min);
    const auto triplets = all_valid_triplets(extracted);
    if (triplets.empty()) return s;
    s.stage = "no_query";
    bool any_neutral = false;
    for (const auto& t : triplets) {
      auto q = build_entity_query(t.head, t.tail, *stops_);
      if (!q) {
        any_neutral = true;
        continue;
      }
      const CnfCount c = query(*q, s);
      s.triplet_counts.push_back(c.count);
      if (!s.count || c.count < s.count->count) {
        s.count = c;
        s.triplet = t;
        s.query = std::move(q);
      }
    }
    if (!s.count) {
      s.triplet = triplets.front();
      return s;
    }
    s.stage = "counted";
    s.reward = map_count(s.count, config_.map);
    if (any_neutral) s.reward = std::min(s.reward, 0.0);
    return s;
  }

  /// First's count; in the top bucket, re-query with the relation's content
  /// words and demote when that count is zero.
  SentenceScore score_relcheck(size_t index, const ExtractorOutput& extracted) const {
    SentenceScore s = score_first(index, extracted);
    s.variant = Variant::RelCheck;
    if (!s.count || s.count->count < config_.map.tau2) return s;
    const auto rq = build_relation_query(*s.query, s.triplet->relation, *stops_);
    if (!rq) return s;
    s.relation_count = query(*rq, s);
    if (s.relation_count->count == 0) {
      s.reward = config_.relcheck_demotion;
      s.relcheck_demoted = true;
    }
    return s;
  }

 private:
  SentenceScore make(size_t index, Variant v) const {
    SentenceScore s;
    s.sentence_index = index;
    s.variant = v;
    return s;
  }

  CnfCount query(const WordQuery& q, SentenceScore& s) const {
    ++s.queries_issued;
    std::optional<uint64_t> limit;
    if (config_.early_exit) limit = config_.map.tau2;
    return counter_->count(q, config_.window, limit);
  }

  const CoocCounter* counter_;
  const StopWordList* stops_;
  ScoringConfig config_;
};

}  // namespace corver
