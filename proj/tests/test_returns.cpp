#include <corver/returns.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace corver;

namespace {

SentenceScore scored(double r) {
  SentenceScore s;
  s.reward = r;
  return s;
}

Alignment aligned(std::vector<size_t> sigma, bool fallback = false) {
  Alignment a;
  a.sigma = std::move(sigma);
  a.fallback = fallback;
  return a;
}

// Straight transcription of the formulas in long double.
std::vector<std::vector<long double>> ref_advantages(const std::vector<std::vector<double>>& R,
                                                     const std::vector<std::vector<bool>>& M, long double eps,
                                                     bool token_scale) {
  const size_t G = R.size();
  std::vector<long double> S(G);
  for (size_t g = 0; g < G; ++g) {
    long double sum = 0;
    long double n = 0;
    for (size_t t = 0; t < R[g].size(); ++t)
      if (M[g][t]) {
        sum += R[g][t];
        n += 1;
      }
    S[g] = sum / n;
  }
  long double mu = 0;
  for (auto s : S) mu += s;
  mu /= static_cast<long double>(G);
  long double var = 0;
  if (!token_scale) {
    for (auto s : S) var += (s - mu) * (s - mu);
    var /= static_cast<long double>(G);
  } else {
    long double sum = 0, n = 0;
    for (size_t g = 0; g < G; ++g)
      for (size_t t = 0; t < R[g].size(); ++t)
        if (M[g][t]) {
          sum += R[g][t];
          n += 1;
        }
    const long double m = sum / n;
    for (size_t g = 0; g < G; ++g)
      for (size_t t = 0; t < R[g].size(); ++t)
        if (M[g][t]) var += (R[g][t] - m) * (R[g][t] - m);
    var /= n;
  }
  long double s = std::sqrt(var);
  if (s < eps) s = eps;
  long double svar = 0;
  for (auto x : S) svar += (x - mu) * (x - mu);
  const bool flat = std::sqrt(svar / static_cast<long double>(G)) < eps;
  std::vector<std::vector<long double>> A(G);
  if (flat) {
    for (size_t g = 0; g < G; ++g) A[g].assign(R[g].size(), 0);
    return A;
  }
  for (size_t g = 0; g < G; ++g) {
    A[g].assign(R[g].size(), 0);
    for (size_t t = 0; t < R[g].size(); ++t)
      if (M[g][t]) A[g][t] = (R[g][t] - mu) / s;
  }
  return A;
}

struct RandomGroup {
  std::vector<std::vector<double>> returns;
  std::vector<std::vector<bool>> masks;
};

RandomGroup random_group(std::mt19937_64& rng) {
  RandomGroup g;
  std::uniform_real_distribution<double> val(-3.0, 3.3);
  const size_t G = 2 + rng() % 7;
  for (size_t k = 0; k < G; ++k) {
    const size_t n = 1 + rng() % 40;
    std::vector<double> r(n);
    std::vector<bool> m(n, true);
    for (size_t t = 0; t < n; ++t) {
      r[t] = val(rng);
      if (t > 0 && rng() % 6 == 0) {
        m[t] = false;
        r[t] = 0.0;
      }
    }
    g.returns.push_back(std::move(r));
    g.masks.push_back(std::move(m));
  }
  return g;
}

}  // namespace

TEST(ResponseReturn, ChannelArithmetic) {
  const ChannelWeights unit;
  EXPECT_DOUBLE_EQ(response_return({JudgeLabel::Good, 2.0}, {true, 1.0, FormatRule::None}, unit), 3.0);
  EXPECT_DOUBLE_EQ(response_return({JudgeLabel::Bad, -1.0}, {false, -1.0, FormatRule::MissingTags}, unit), -2.0);
  ChannelWeights format_only;
  format_only.lambda_j = 0.0;
  EXPECT_DOUBLE_EQ(response_return({JudgeLabel::Good, 2.0}, {false, -1.0, FormatRule::MissingTags}, format_only), -1.0);
}

TEST(TokenReturns, IndicatorAndSentenceReward) {
  const auto r = token_returns(3.0, {scored(0.1), scored(-0.3)}, aligned({0, 1, 1, 0, 2}),
                               {true, true, true, true, true}, ChannelWeights{});
  EXPECT_DOUBLE_EQ(r[0], 3.0);
  EXPECT_DOUBLE_EQ(r[1], 3.1);
  EXPECT_DOUBLE_EQ(r[2], 3.1);
  EXPECT_DOUBLE_EQ(r[3], 3.0);
  EXPECT_DOUBLE_EQ(r[4], 2.7);
}

TEST(TokenReturns, FallbackGivesResponseReturnEverywhere) {
  const auto r = token_returns(3.0, {scored(0.1), scored(-0.3)}, aligned({1, 2, 0}, true), {true, true, true},
                               ChannelWeights{});
  for (double v : r) EXPECT_DOUBLE_EQ(v, 3.0);
}

TEST(TokenReturns, PaddingCarriesZero) {
  const auto r = token_returns(3.0, {scored(0.1)}, aligned({1, 0, 0}), {true, false, false}, ChannelWeights{});
  EXPECT_EQ(r, (std::vector<double>{3.1, 0.0, 0.0}));
}

TEST(TokenReturns, LambdaScalesSentenceTerm) {
  ChannelWeights w;
  w.lambda_c = 2.0;
  EXPECT_DOUBLE_EQ(token_returns(1.0, {scored(0.1)}, aligned({1}), {true}, w)[0], 1.2);
}

TEST(TokenReturns, ContractViolations) {
  EXPECT_THROW(token_returns(0.0, {scored(0.1)}, aligned({2}), {true}, ChannelWeights{}), std::out_of_range);
  EXPECT_THROW(token_returns(0.0, {}, aligned({0, 0}), {true}, ChannelWeights{}), std::invalid_argument);
}

TEST(GroupAdvantages, ZeroDeviationGroupGivesZeros) {
  const auto flat = group_advantages({{2.0, 2.0}, {2.0, 2.0, 2.0}}, {{true, true}, {true, true, true}});
  EXPECT_DOUBLE_EQ(flat.scale, 1e-6);
  for (const auto& row : flat.advantages)
    for (double v : row) EXPECT_EQ(v, 0.0);
}

TEST(GroupAdvantages, IdenticalShapedCompletionsGiveZeros) {
  // zero spread between completions, nonzero spread inside them
  const std::vector<std::vector<double>> R = {{3.1, 3.0, 2.7}, {3.1, 3.0, 2.7}, {3.1, 3.0, 2.7}};
  const std::vector<std::vector<bool>> M(3, {true, true, true});
  for (auto mode : {ScaleMode::Scalar, ScaleMode::Token}) {
    const auto a = group_advantages(R, M, 1e-6, mode);
    for (const auto& row : a.advantages)
      for (double v : row) EXPECT_EQ(v, 0.0);
  }
}

TEST(GroupAdvantages, SpreadJustAboveEpsilonIsNormalized) {
  const auto a = group_advantages({{1.0, 1.0}, {1.0 + 4e-6, 1.0 + 4e-6}}, {{true, true}, {true, true}});
  EXPECT_NEAR(a.scale, 2e-6, 1e-12);
  EXPECT_NEAR(a.advantages[0][0], -1.0, 1e-6);
  EXPECT_NEAR(a.advantages[1][1], 1.0, 1e-6);
}

TEST(GroupAdvantages, TwoCompletionsOneAndThree) {
  const auto a = group_advantages({{1.0, 1.0, 1.0}, {3.0, 3.0}}, {{true, true, true}, {true, true}});
  EXPECT_DOUBLE_EQ(a.baseline, 2.0);
  EXPECT_DOUBLE_EQ(a.scale, 1.0);
  for (double v : a.advantages[0]) EXPECT_DOUBLE_EQ(v, -1.0);
  for (double v : a.advantages[1]) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(GroupAdvantages, OppositeSignsWithinOneCompletion) {
  // completion 0: a +0.1 sentence and a -0.3 sentence around the baseline
  const double rr = 0.0;
  const auto r0 = token_returns(rr, {scored(0.1), scored(-0.3)}, aligned({1, 1, 2, 2}), std::vector<bool>(4, true),
                                ChannelWeights{});
  const std::vector<std::vector<double>> R = {r0, {-0.2, -0.2}, {0.0, 0.0}};  // means -0.1, -0.2, 0
  const auto a = group_advantages(R, {std::vector<bool>(4, true), {true, true}, {true, true}});
  EXPECT_GT(a.advantages[0][0], 0.0);
  EXPECT_LT(a.advantages[0][2], 0.0);
}

TEST(GroupAdvantages, Errors) {
  EXPECT_THROW(group_advantages({{1.0}}, {{true}}), std::invalid_argument);
  EXPECT_THROW(group_advantages({{1.0}, {1.0}}, {{true}, {false}}), std::invalid_argument);
  EXPECT_THROW(group_advantages({{1.0}, {1.0}}, {{true}}), std::invalid_argument);
  EXPECT_THROW(group_advantages({{1.0}, {1.0, 2.0}}, {{true}, {true}}), std::invalid_argument);
  EXPECT_THROW(group_advantages({{1.0}, {1.0}}, {{true}, {true}}, 0.0), std::invalid_argument);
}

TEST(GroupAdvantages, PaddingIsZero) {
  const auto a = group_advantages({{1.0, 9.0}, {3.0, 9.0}}, {{true, false}, {true, false}});
  EXPECT_EQ(a.advantages[0][1], 0.0);
  EXPECT_EQ(a.advantages[1][1], 0.0);
  EXPECT_DOUBLE_EQ(a.advantages[0][0], -1.0);
}

TEST(GroupAdvantages, MatchesReferenceBothScaleModes) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 2000; ++i) {
    const auto g = random_group(rng);
    for (bool token : {false, true}) {
      const auto got = group_advantages(g.returns, g.masks, 1e-6, token ? ScaleMode::Token : ScaleMode::Scalar);
      const auto want = ref_advantages(g.returns, g.masks, 1e-6L, token);
      for (size_t k = 0; k < want.size(); ++k)
        for (size_t t = 0; t < want[k].size(); ++t)
          ASSERT_NEAR(got.advantages[k][t], static_cast<double>(want[k][t]), 1e-9 * (1 + std::fabs(static_cast<double>(want[k][t]))));
    }
  }
}

TEST(Invariants, ShiftInvariance) {
  std::mt19937_64 rng(41);
  for (int i = 0; i < 500; ++i) {
    auto g = random_group(rng);
    const auto base = group_advantages(g.returns, g.masks);
    const double k = std::uniform_real_distribution<double>(-10, 10)(rng);
    for (size_t c = 0; c < g.returns.size(); ++c)
      for (size_t t = 0; t < g.returns[c].size(); ++t)
        if (g.masks[c][t]) g.returns[c][t] += k;
    const auto shifted = group_advantages(g.returns, g.masks);
    for (size_t c = 0; c < g.returns.size(); ++c)
      for (size_t t = 0; t < g.returns[c].size(); ++t)
        ASSERT_NEAR(shifted.advantages[c][t], base.advantages[c][t], 1e-7 * (1 + std::fabs(base.advantages[c][t])));
  }
}

TEST(Invariants, ScaleInvariance) {
  std::mt19937_64 rng(43);
  for (int i = 0; i < 500; ++i) {
    auto g = random_group(rng);
    const auto base = group_advantages(g.returns, g.masks);
    if (base.scale <= 1e-3) continue;
    const double k = std::uniform_real_distribution<double>(0.5, 20)(rng);
    for (auto& row : g.returns)
      for (double& v : row) v *= k;
    const auto scaled = group_advantages(g.returns, g.masks);
    for (size_t c = 0; c < g.returns.size(); ++c)
      for (size_t t = 0; t < g.returns[c].size(); ++t)
        ASSERT_NEAR(scaled.advantages[c][t], base.advantages[c][t], 1e-9 * (1 + std::fabs(base.advantages[c][t])));
  }
}

TEST(Invariants, SentenceGapEqualsRewardGapOverScale) {
  std::mt19937_64 rng(47);
  const std::vector<double> rewards = {-0.3, -0.1, 0.0, 0.1, -0.05};
  for (int i = 0; i < 500; ++i) {
    ChannelWeights w;
    w.lambda_c = std::uniform_real_distribution<double>(0.1, 3.0)(rng);
    std::vector<SentenceScore> scores;
    for (int s = 0; s < 4; ++s) scores.push_back(scored(rewards[rng() % rewards.size()]));
    std::vector<size_t> sigma;
    for (int t = 0; t < 20; ++t) sigma.push_back(rng() % 5);
    const auto r0 = token_returns(1.0 + static_cast<double>(rng() % 3), scores, aligned(sigma), std::vector<bool>(20, true), w);
    const std::vector<std::vector<double>> R = {r0, {-2.0, 0.5}, {3.0}};
    const auto a = group_advantages(R, {std::vector<bool>(20, true), {true, true}, {true}});
    for (size_t x = 0; x < 20; ++x)
      for (size_t y = 0; y < 20; ++y) {
        if (sigma[x] == 0 || sigma[y] == 0) continue;
        const double want = w.lambda_c * (scores[sigma[x] - 1].reward - scores[sigma[y] - 1].reward) / a.scale;
        ASSERT_NEAR(a.advantages[0][x] - a.advantages[0][y], want, 1e-12);
      }
  }
}

TEST(Invariants, ZeroLambdaGivesUniformCompletionAdvantage) {
  ChannelWeights w;
  w.lambda_c = 0.0;
  const auto r0 = token_returns(3.0, {scored(0.1), scored(-0.3)}, aligned({0, 1, 2, 2}), std::vector<bool>(4, true), w);
  const auto a = group_advantages({r0, {-2.0, -2.0}}, {std::vector<bool>(4, true), {true, true}});
  for (double v : a.advantages[0]) EXPECT_DOUBLE_EQ(v, a.advantages[0][0]);
}

TEST(Invariants, ScalarLevelZeroMean) {
  std::mt19937_64 rng(53);
  for (int i = 0; i < 1000; ++i) {
    const auto g = random_group(rng);
    const auto a = group_advantages(g.returns, g.masks);
    // mean over completions of each completion's masked mean advantage
    double total = 0.0, mag = 0.0;
    for (size_t c = 0; c < g.returns.size(); ++c) {
      double sum = 0.0;
      size_t n = 0;
      for (size_t t = 0; t < g.returns[c].size(); ++t)
        if (g.masks[c][t]) {
          sum += a.advantages[c][t];
          ++n;
        }
      total += sum / static_cast<double>(n);
      mag += std::fabs(sum / static_cast<double>(n));
    }
    ASSERT_NEAR(total, 0.0, 1e-9 * (1 + mag));
    ASSERT_GT(a.scale, 0.0);
  }
}

TEST(ScaleMode, ParseNames) {
  EXPECT_EQ(parse_scale_mode("scalar"), ScaleMode::Scalar);
  EXPECT_EQ(parse_scale_mode("token"), ScaleMode::Token);
  EXPECT_THROW(parse_scale_mode("group"), std::invalid_argument);
}
