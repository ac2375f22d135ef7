#pragma once

// Question-pool filtering by rollout grades, anchor mixing, and calibration
// buckets with Wilson score intervals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace corver {

struct QuestionStats {
  std::string question_id;
  int n_correct = 0;
  int group_size = 0;
};

namespace detail {

inline int shared_group_size(const std::vector<QuestionStats>& stats) {
  if (stats.empty()) return 0;
  const int g = stats.front().group_size;
  for (const auto& s : stats) {
    if (s.group_size != g)
      throw std::invalid_argument("mixed group sizes: " + std::to_string(g) + " and " +
                                  std::to_string(s.group_size) + " (question " + s.question_id + ")");
    if (s.n_correct < 0 || s.n_correct > s.group_size)
      throw std::invalid_argument("question " + s.question_id + ": n_correct " +
                                  std::to_string(s.n_correct) + " outside [0, " +
                                  std::to_string(s.group_size) + "]");
  }
  return g;
}

}  // namespace detail

/// Keeps questions with low <= n_correct <= high, in input order. `high`
/// defaults to G - 1.
inline std::vector<std::string> learning_zone_filter(const std::vector<QuestionStats>& stats,
                                                     int low = 1,
                                                     std::optional<int> high = std::nullopt) {
  const int g = detail::shared_group_size(stats);
  const int hi = high.value_or(g - 1);
  std::vector<std::string> kept;
  for (const auto& s : stats)
    if (s.n_correct >= low && s.n_correct <= hi) kept.push_back(s.question_id);
  return kept;
}

struct ZoneSummary {
  size_t never = 0;     // n_correct == 0
  size_t learning = 0;  // 1 <= n_correct <= G-1
  size_t mastered = 0;  // n_correct == G
  size_t total() const { return never + learning + mastered; }
};

inline ZoneSummary zone_summary(const std::vector<QuestionStats>& stats) {
  const int g = detail::shared_group_size(stats);
  ZoneSummary z;
  for (const auto& s : stats) {
    if (s.n_correct == 0) ++z.never;
    else if (s.n_correct == g) ++z.mastered;
    else ++z.learning;
  }
  return z;
}

inline std::vector<std::string> mastered_questions(const std::vector<QuestionStats>& stats) {
  const int g = detail::shared_group_size(stats);
  std::vector<std::string> out;
  for (const auto& s : stats)
    if (s.n_correct == g) out.push_back(s.question_id);
  return out;
}

namespace detail {

/// Unbiased draw from [0, bound) independent of the standard library's
/// distribution implementation.
inline uint64_t bounded(std::mt19937_64& rng, uint64_t bound) {
  const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  uint64_t x;
  do x = rng(); while (x >= limit);
  return x % bound;
}

}  // namespace detail

/// Kept ids followed by k mastered ids drawn uniformly without replacement
/// (listed in their original order).
inline std::vector<std::string> mix_anchors(const std::vector<std::string>& kept,
                                            const std::vector<std::string>& mastered, size_t k,
                                            uint64_t seed) {
  if (k > mastered.size())
    throw std::invalid_argument("cannot draw " + std::to_string(k) + " anchors from " +
                                std::to_string(mastered.size()) + " mastered questions");
  std::unordered_set<std::string> seen(kept.begin(), kept.end());
  if (seen.size() != kept.size()) throw std::invalid_argument("kept ids contain duplicates");
  for (const auto& m : mastered)
    if (seen.count(m)) throw std::invalid_argument("id " + m + " is both kept and mastered");
  if (std::unordered_set<std::string>(mastered.begin(), mastered.end()).size() != mastered.size())
    throw std::invalid_argument("mastered ids contain duplicates");

  std::vector<size_t> idx(mastered.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  for (size_t i = 0; i < k; ++i) {
    const size_t j = i + static_cast<size_t>(detail::bounded(rng, idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));

  std::vector<std::string> pool = kept;
  for (size_t i = 0; i < k; ++i) pool.push_back(mastered[idx[i]]);
  return pool;
}

struct Interval {
  double low = 0.0;
  double high = 1.0;
};

/// Wilson score interval for a binomial proportion.
inline Interval wilson_interval(uint64_t correct, uint64_t n, double z = 1.96) {
  if (n == 0) throw std::invalid_argument("wilson_interval: n must be positive");
  if (correct > n) throw std::invalid_argument("wilson_interval: correct exceeds n");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(correct) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  Interval iv{std::max(0.0, center - half), std::min(1.0, center + half)};
  if (correct == 0) iv.low = 0.0;
  if (correct == n) iv.high = 1.0;
  return iv;
}

struct CalibrationRecord {
  uint64_t count = 0;
  std::optional<bool> correct;
};

struct CalibrationBucket {
  uint64_t lower = 0;
  std::optional<uint64_t> upper;  // inclusive; nullopt = unbounded
  uint64_t n = 0;
  uint64_t correct = 0;
  double precision = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct CalibrationReport {
  std::vector<CalibrationBucket> buckets;
  size_t skipped = 0;
};

/// Bucket layout from cut points: {0} on its own, then [1, c1-1], [c1, c2-1],
/// ..., [c_last, inf). Cut points 0,5,10,20 give {0},[1,4],[5,9],[10,19],[20,inf).
inline std::vector<CalibrationBucket> buckets_from_cuts(std::vector<uint64_t> cuts) {
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  if (cuts.empty() || cuts.front() != 0) cuts.insert(cuts.begin(), 0);
  std::vector<CalibrationBucket> out;
  out.push_back({0, 0});
  uint64_t lo = 1;
  for (size_t i = 1; i < cuts.size(); ++i) {
    if (cuts[i] > lo) out.push_back({lo, cuts[i] - 1});
    lo = cuts[i];
  }
  out.push_back({lo, std::nullopt});
  return out;
}

inline std::vector<CalibrationBucket> default_calibration_buckets() {
  return buckets_from_cuts({0, 5, 10, 20});
}

/// Records without a correctness label are skipped and counted.
inline CalibrationReport calibrate(const std::vector<CalibrationRecord>& records,
                                   std::vector<CalibrationBucket> buckets, double z = 1.96) {
  for (size_t i = 0; i < buckets.size(); ++i) {
    const uint64_t expect_lo = i == 0 ? 0 : buckets[i - 1].upper.value_or(UINT64_MAX - 1) + 1;
    if (buckets[i].lower != expect_lo || (buckets[i].upper && *buckets[i].upper < buckets[i].lower) ||
        (i + 1 < buckets.size() && !buckets[i].upper) || (i + 1 == buckets.size() && buckets[i].upper))
      throw std::invalid_argument("calibration buckets must partition [0, inf)");
  }
  CalibrationReport rep;
  rep.buckets = std::move(buckets);
  for (const auto& r : records) {
    if (!r.correct) {
      ++rep.skipped;
      continue;
    }
    auto it = std::find_if(rep.buckets.begin(), rep.buckets.end(), [&](const CalibrationBucket& b) {
      return r.count >= b.lower && (!b.upper || r.count <= *b.upper);
    });
    ++it->n;
    if (*r.correct) ++it->correct;
  }
  for (auto& b : rep.buckets) {
    if (b.n == 0) continue;
    b.precision = static_cast<double>(b.correct) / static_cast<double>(b.n);
    const Interval iv = wilson_interval(b.correct, b.n, z);
    b.ci_low = iv.low;
    b.ci_high = iv.high;
  }
  return rep;
}

}  // namespace corver
