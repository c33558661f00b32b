#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "coachlab/policy.hpp"

using namespace coachlab;

namespace {

const std::vector<double> kOneHot0{1.0, 0.0};

double log_prob(const ParamPolicy& p, std::span<const double> x, ActionId a) {
  return std::log(p.action_distribution(x)[a]);
}

ParamPolicy random_policy(std::mt19937_64& rng, std::size_t dim, std::size_t actions, BiasMode bias) {
  ParamPolicy p(dim, actions, bias);
  std::normal_distribution<double> n(0.0, 1.0);
  for (double& w : p.mutable_parameters()) w = n(rng);
  return p;
}

}  // namespace

TEST(ActionDistribution, ZeroParametersGiveUniform) {
  const ParamPolicy p(3, 4);
  for (double pr : p.action_distribution(std::vector<double>{0.3, -1.0, 2.0})) EXPECT_DOUBLE_EQ(pr, 0.25);
}

TEST(ActionDistribution, LogisticOfPreferenceGap) {
  ParamPolicy p(1, 2);
  p.mutable_parameters()[0] = 1.0;
  const auto pi = p.action_distribution(std::vector<double>{1.0});
  EXPECT_NEAR(pi[0], 0.7311, 1e-4);
  EXPECT_NEAR(pi[1], 0.2689, 1e-4);
}

TEST(ActionDistribution, ShiftInvariant) {
  std::mt19937_64 rng(1);
  ParamPolicy p = random_policy(rng, 1, 5, BiasMode::none);
  const std::vector<double> x{1.0};
  const auto before = p.action_distribution(x);
  for (double& w : p.mutable_parameters()) w += 123.0;
  const auto after = p.action_distribution(x);
  for (std::size_t a = 0; a < 5; ++a) EXPECT_NEAR(before[a], after[a], 1e-12);
}

TEST(ActionDistribution, LargePreferencesStayFinite) {
  ParamPolicy p(1, 3);
  p.mutable_parameters()[0] = 800.0;
  const auto pi = p.action_distribution(std::vector<double>{1.0});
  EXPECT_EQ(pi[0], 1.0);
  EXPECT_EQ(pi[1], 0.0);
}

TEST(ActionDistribution, NonFiniteFeatureRejected) {
  const ParamPolicy p(2, 2);
  const std::vector<double> x{1.0, std::numeric_limits<double>::quiet_NaN()};
  EXPECT_THROW(p.action_distribution(x), std::invalid_argument);
}

TEST(Score, UniformTwoActionTabular) {
  const ParamPolicy p(2, 2);
  const auto g = p.score(kOneHot0, 0);
  EXPECT_EQ(g, (std::vector<double>{0.5, 0.0, -0.5, 0.0}));
}

TEST(Score, VanishesInDeterministicLimit) {
  ParamPolicy p(1, 2);
  p.mutable_parameters()[0] = 60.0;
  for (double g : p.score(std::vector<double>{1.0}, 0)) EXPECT_LT(std::abs(g), 1e-20);
}

TEST(Score, MatchesCentralFiniteDifferences) {
  std::mt19937_64 rng(99);
  for (BiasMode bias : {BiasMode::none, BiasMode::saturating}) {
    for (int trial = 0; trial < 50; ++trial) {
      ParamPolicy p = random_policy(rng, 4, 3, bias);
      std::vector<double> x(4);
      std::normal_distribution<double> n(0.0, 1.0);
      for (double& v : x) v = n(rng);
      const ActionId a = trial % 3;
      const auto g = p.score(x, a);
      constexpr double h = 1e-6;
      std::vector<double> fd(p.num_parameters());
      for (std::size_t i = 0; i < fd.size(); ++i) {
        ParamPolicy plus = p, minus = p;
        plus.mutable_parameters()[i] += h;
        minus.mutable_parameters()[i] -= h;
        fd[i] = (log_prob(plus, x, a) - log_prob(minus, x, a)) / (2 * h);
      }
      double diff = 0.0, norm = 0.0;
      for (std::size_t i = 0; i < fd.size(); ++i) {
        diff += (g[i] - fd[i]) * (g[i] - fd[i]);
        norm += fd[i] * fd[i];
      }
      EXPECT_LT(std::sqrt(diff) / std::max(std::sqrt(norm), 1e-8), 1e-5);
    }
  }
}

TEST(Score, ExpectationUnderPolicyIsZero) {
  std::mt19937_64 rng(5);
  const ParamPolicy p = random_policy(rng, 3, 4, BiasMode::saturating);
  const std::vector<double> x{0.2, -0.7, 1.1};
  const auto pi = p.action_distribution(x);
  std::vector<double> mean(p.num_parameters(), 0.0);
  for (ActionId a = 0; a < 4; ++a) {
    const auto g = p.score(x, a);
    for (std::size_t i = 0; i < g.size(); ++i) mean[i] += pi[a] * g[i];
  }
  for (double m : mean) EXPECT_NEAR(m, 0.0, 1e-12);
}

TEST(FeedbackUpdate, ZeroFeedbackIsNoOp) {
  ParamPolicy p(2, 2);
  p.mutable_parameters()[1] = 0.4;
  const ParamPolicy before = p;
  p.apply_feedback_update(kOneHot0, 1, 0.0, 0.5);
  EXPECT_EQ(p, before);
}

TEST(FeedbackUpdate, UniformPositiveStep) {
  ParamPolicy p(2, 2);
  p.apply_feedback_update(kOneHot0, 0, 1.0, 1.0);
  const auto h = p.preferences(kOneHot0);
  EXPECT_DOUBLE_EQ(h[0], 0.5);
  EXPECT_DOUBLE_EQ(h[1], -0.5);
  EXPECT_NEAR(p.action_distribution(kOneHot0)[0], 0.7311, 1e-4);
}

TEST(FeedbackUpdate, SignMovesProbabilityMonotonically) {
  std::mt19937_64 rng(17);
  for (UpdateMode mode : {UpdateMode::likelihood_ratio, UpdateMode::preference_direct}) {
    for (int trial = 0; trial < 100; ++trial) {
      const ParamPolicy base = random_policy(rng, 3, 4, BiasMode::none);
      const std::vector<double> x{0.5, 1.0, -0.25};
      const ActionId a = trial % 4;
      const double before = base.action_distribution(x)[a];
      ParamPolicy up = base, down = base;
      up.apply_feedback_update(x, a, 1.0, 0.1, mode);
      down.apply_feedback_update(x, a, -1.0, 0.1, mode);
      EXPECT_GT(up.action_distribution(x)[a], before);
      EXPECT_LT(down.action_distribution(x)[a], before);
    }
  }
}

TEST(FeedbackUpdate, RejectsBadInputs) {
  ParamPolicy p(2, 2);
  EXPECT_THROW(p.apply_feedback_update(kOneHot0, 0, std::numeric_limits<double>::infinity(), 0.1),
               std::invalid_argument);
  EXPECT_THROW(p.apply_feedback_update(kOneHot0, 0, 1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(p.apply_feedback_update(kOneHot0, 0, std::nan(""), 0.1), std::invalid_argument);
}

TEST(PreferenceDirect, MovesChosenUpAndOthersByProbability) {
  const ParamPolicy p(2, 3);
  const auto d = p.update_direction(kOneHot0, 1, UpdateMode::preference_direct);
  EXPECT_DOUBLE_EQ(d[0 * 2], -1.0 / 3.0);
  EXPECT_DOUBLE_EQ(d[1 * 2], 1.0);
  EXPECT_DOUBLE_EQ(d[2 * 2], -1.0 / 3.0);
  EXPECT_EQ(d[1], 0.0);
}

TEST(SaturatingBias, BoundsThePreferenceContribution) {
  ParamPolicy p(1, 2, BiasMode::saturating);
  p.mutable_parameters()[2] = 50.0;
  const auto h = p.preferences(std::vector<double>{0.0});
  EXPECT_NEAR(h[0] - h[1], 1.0, 1e-12);
  EXPECT_THROW(parse_bias_mode("sideways"), std::invalid_argument);
}

TEST(ParamPolicy, GreedyTiesToLowestIndex) {
  const ParamPolicy p(1, 3);
  EXPECT_EQ(p.greedy_action(std::vector<double>{1.0}), 0u);
}

TEST(ParamPolicy, SerializeRoundTripIsExact) {
  std::mt19937_64 rng(8);
  const ParamPolicy p = random_policy(rng, 5, 3, BiasMode::saturating_direct);
  const ParamPolicy back = ParamPolicy::deserialize(p.serialize());
  EXPECT_EQ(back, p);
  EXPECT_THROW(ParamPolicy::deserialize("garbage"), std::invalid_argument);
}

TEST(Tabulate, RowsAreDistributions) {
  std::mt19937_64 rng(2);
  const ParamPolicy p = random_policy(rng, 6, 4, BiasMode::none);
  const TabularFeatures f(6);
  const TabularPolicy t = tabulate(p, f, 6);
  for (StateId s = 0; s < 6; ++s) {
    double sum = 0.0;
    for (ActionId a = 0; a < 4; ++a) sum += t(s, a);
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
  const TabularPolicy g = greedy_tabular(p, f, 6);
  for (StateId s = 0; s < 6; ++s) EXPECT_EQ(g(s, p.greedy_action(f(s))), 1.0);
}
