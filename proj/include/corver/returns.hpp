#pragma once

// Response-level return, per-token returns and group-normalized advantages.

#include <corver/grading.hpp>
#include <corver/reward.hpp>
#include <corver/segmentation.hpp>

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace corver {

struct ChannelWeights {
  double lambda_f = 1.0;
  double lambda_j = 1.0;
  double lambda_c = 1.0;
};

enum class ScaleMode { Scalar, Token };

inline ScaleMode parse_scale_mode(std::string_view s) {
  if (s == "scalar") return ScaleMode::Scalar;
  if (s == "token") return ScaleMode::Token;
  throw std::invalid_argument("unknown scale_mode '" + std::string(s) + "' (scalar|token)");
}

inline const char* to_string(ScaleMode m) { return m == ScaleMode::Scalar ? "scalar" : "token"; }

struct CompletionScore {
  double response_return = 0.0;
  std::vector<double> token_returns;
  std::vector<SentenceScore> sentence_scores;
  std::vector<SentenceSpan> sentences;
  Alignment alignment;
  JudgeVerdict judge;
  FormatVerdict format;
  std::string prediction;
  std::vector<bool> mask;
};

struct GroupAdvantages {
  std::vector<std::vector<double>> advantages;
  std::vector<double> completion_means;
  double baseline = 0.0;
  double scale = 1.0;
  double epsilon = 1e-6;
};

inline double response_return(const JudgeVerdict& judge, const FormatVerdict& fmt,
                              const ChannelWeights& w) {
  return w.lambda_j * judge.reward + w.lambda_f * fmt.reward;
}

/// R_t = rr + [sigma(t) > 0] * lambda_c * r_sigma(t) on masked tokens, 0 on
/// padding; every masked token gets rr when the alignment fell back.
inline std::vector<double> token_returns(double rr, const std::vector<SentenceScore>& scores,
                                         const Alignment& alignment,
                                         const std::vector<bool>& mask, const ChannelWeights& w) {
  if (mask.size() != alignment.sigma.size())
    throw std::invalid_argument("mask and alignment disagree on token count");
  std::vector<double> out(mask.size(), 0.0);
  for (size_t t = 0; t < mask.size(); ++t) {
    if (!mask[t]) continue;
    const size_t sid = alignment.sigma[t];
    if (sid > scores.size())
      throw std::out_of_range("token " + std::to_string(t) + " aligned to sentence " +
                              std::to_string(sid) + " but only " + std::to_string(scores.size()) +
                              " sentences were scored");
    out[t] = rr;
    if (!alignment.fallback && sid > 0) out[t] += w.lambda_c * scores[sid - 1].reward;
  }
  return out;
}

/// Within-group baseline is the mean of per-completion masked means; the
/// scale is the population std of those means (Scalar) or of all masked token
/// returns in the group (Token), floored at epsilon. A group whose completion
/// means spread by less than epsilon has no relative signal: every advantage
/// is 0.
inline GroupAdvantages group_advantages(const std::vector<std::vector<double>>& returns,
                                        const std::vector<std::vector<bool>>& masks,
                                        double epsilon = 1e-6,
                                        ScaleMode mode = ScaleMode::Scalar) {
  const size_t g = returns.size();
  if (g < 2) throw std::invalid_argument("group advantages need at least 2 completions");
  if (masks.size() != g) throw std::invalid_argument("one mask per completion required");
  if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be positive");

  GroupAdvantages out;
  out.epsilon = epsilon;
  out.completion_means.resize(g);
  for (size_t k = 0; k < g; ++k) {
    if (masks[k].size() != returns[k].size())
      throw std::invalid_argument("completion " + std::to_string(k) + ": mask/return length mismatch");
    double sum = 0.0;
    size_t n = 0;
    for (size_t t = 0; t < returns[k].size(); ++t)
      if (masks[k][t]) {
        sum += returns[k][t];
        ++n;
      }
    if (n == 0) throw std::invalid_argument("completion " + std::to_string(k) + " has no masked tokens");
    out.completion_means[k] = sum / static_cast<double>(n);
  }
  out.baseline = std::accumulate(out.completion_means.begin(), out.completion_means.end(), 0.0) /
                 static_cast<double>(g);

  double scalar_var = 0.0;
  for (double s : out.completion_means) scalar_var += (s - out.baseline) * (s - out.baseline);
  scalar_var /= static_cast<double>(g);
  const bool degenerate = std::sqrt(scalar_var) < epsilon;

  double var = 0.0;
  if (mode == ScaleMode::Scalar) {
    var = scalar_var;
  } else {
    double sum = 0.0;
    size_t n = 0;
    for (size_t k = 0; k < g; ++k)
      for (size_t t = 0; t < returns[k].size(); ++t)
        if (masks[k][t]) {
          sum += returns[k][t];
          ++n;
        }
    const double mean = sum / static_cast<double>(n);
    for (size_t k = 0; k < g; ++k)
      for (size_t t = 0; t < returns[k].size(); ++t)
        if (masks[k][t]) var += (returns[k][t] - mean) * (returns[k][t] - mean);
    var /= static_cast<double>(n);
  }
  out.scale = std::max(std::sqrt(var), epsilon);

  out.advantages.resize(g);
  for (size_t k = 0; k < g; ++k) {
    out.advantages[k].assign(returns[k].size(), 0.0);
    if (degenerate) continue;
    for (size_t t = 0; t < returns[k].size(); ++t)
      if (masks[k][t]) out.advantages[k][t] = (returns[k][t] - out.baseline) / out.scale;
  }
  return out;
}

inline GroupAdvantages group_advantages(const std::vector<CompletionScore>& group,
                                        double epsilon = 1e-6,
                                        ScaleMode mode = ScaleMode::Scalar) {
  std::vector<std::vector<double>> returns;
  std::vector<std::vector<bool>> masks;
  for (const auto& c : group) {
    returns.push_back(c.token_returns);
    masks.push_back(c.mask);
  }
  return group_advantages(returns, masks, epsilon, mode);
}

}  // namespace corver
