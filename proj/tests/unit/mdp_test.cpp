#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

#include "coachlab/gridworld.hpp"
#include "coachlab/mdp.hpp"

using namespace coachlab;

namespace {

Mdp random_mdp(std::mt19937_64& rng, std::size_t n, std::size_t m, double gamma) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  Mdp::Builder b(n, m, gamma);
  for (StateId s = 0; s < n; ++s) {
    for (ActionId a = 0; a < m; ++a) {
      const double p = 0.2 + 0.6 * u(rng);
      b.add_outcome(s, a, pick(rng), p, 10.0 * u(rng) - 5.0);
      b.add_outcome(s, a, pick(rng), 1.0 - p, 10.0 * u(rng) - 5.0);
    }
  }
  return b.build();
}

TabularPolicy random_policy(std::mt19937_64& rng, std::size_t n, std::size_t m) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> probs(n * m);
  for (StateId s = 0; s < n; ++s) {
    double total = 0.0;
    for (ActionId a = 0; a < m; ++a) total += probs[s * m + a] = u(rng);
    for (ActionId a = 0; a < m; ++a) probs[s * m + a] /= total;
  }
  return TabularPolicy(n, m, probs);
}

// Direct solve of (I - gamma P_pi) V = R_pi.
Eigen::VectorXd solve_linear(const Mdp& mdp, const TabularPolicy& pi) {
  const auto n = static_cast<Eigen::Index>(mdp.num_states());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
  for (StateId s = 0; s < mdp.num_states(); ++s) {
    if (mdp.is_terminal(s)) continue;
    for (ActionId a = 0; a < mdp.num_actions(); ++a) {
      for (const Outcome& o : mdp.outcomes(s, a)) {
        p(s, o.next) += pi(s, a) * o.probability;
        r(s) += pi(s, a) * o.probability * o.reward;
      }
    }
  }
  const Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(n, n) - mdp.gamma() * p;
  return lhs.fullPivLu().solve(r);
}

}  // namespace

TEST(EvaluatePolicy, SelfLoopIsGeometricSeries) {
  const Mdp mdp = Mdp::Builder(1, 1, 0.5).add_outcome(0, 0, 0, 1.0, 1.0).build();
  const ValueTable v = evaluate_policy(mdp, TabularPolicy(1, 1));
  EXPECT_NEAR(v[0], 2.0, 1e-9);
}

TEST(EvaluatePolicy, ZeroDiscountIsExpectedImmediateReward) {
  std::mt19937_64 rng(11);
  const Mdp mdp = random_mdp(rng, 6, 3, 0.0);
  const TabularPolicy pi = random_policy(rng, 6, 3);
  const ValueTable v = evaluate_policy(mdp, pi);
  for (StateId s = 0; s < 6; ++s) {
    double expected = 0.0;
    for (ActionId a = 0; a < 3; ++a) expected += pi(s, a) * mdp.expected_reward(s, a);
    EXPECT_NEAR(v[s], expected, 1e-12);
  }
}

TEST(EvaluatePolicy, MatchesLinearSolve) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Mdp mdp = random_mdp(rng, 4, 2, 0.9);
    const TabularPolicy pi = random_policy(rng, 4, 2);
    const ValueTable v = evaluate_policy(mdp, pi);
    const Eigen::VectorXd oracle = solve_linear(mdp, pi);
    for (StateId s = 0; s < 4; ++s) EXPECT_NEAR(v[s], oracle(s), 1e-6);
    EXPECT_LE(bellman_residual(mdp, pi, v), 1e-10);
  }
}

TEST(EvaluatePolicy, LargerRandomMdpsMatchLinearSolve) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const Mdp mdp = random_mdp(rng, 40, 5, 0.97);
    const TabularPolicy pi = random_policy(rng, 40, 5);
    const ValueTable v = evaluate_policy(mdp, pi);
    const Eigen::VectorXd oracle = solve_linear(mdp, pi);
    for (StateId s = 0; s < 40; ++s) EXPECT_NEAR(v[s], oracle(s), 1e-7);
  }
}

TEST(EvaluatePolicy, UndiscountedContinuingTaskHitsIterationCap) {
  const Mdp mdp = Mdp::Builder(1, 1, 1.0).add_outcome(0, 0, 0, 1.0, 1.0).build();
  EvaluationOptions options;
  options.max_iterations = 1000;
  EXPECT_THROW(evaluate_policy(mdp, TabularPolicy(1, 1), options), ConvergenceError);
}

TEST(EvaluatePolicy, WarmStartReachesSameFixedPoint) {
  std::mt19937_64 rng(9);
  const Mdp mdp = random_mdp(rng, 10, 3, 0.95);
  const TabularPolicy pi = random_policy(rng, 10, 3);
  const ValueTable cold = evaluate_policy(mdp, pi);
  std::vector<double> warm_start(10, 100.0);
  EvaluationOptions options;
  options.initial = warm_start;
  const ValueTable warm = evaluate_policy(mdp, pi, options);
  for (StateId s = 0; s < 10; ++s) EXPECT_NEAR(warm[s], cold[s], 1e-8);
}

TEST(MdpBuilder, RejectsMalformedTables) {
  EXPECT_THROW(Mdp::Builder(2, 1, 0.9).add_outcome(0, 0, 1, 0.5, 0.0).set_terminal(1).build(), std::invalid_argument);
  EXPECT_THROW(Mdp::Builder(2, 1, 0.9).add_outcome(0, 0, 1, 1.0, 0.0).build(), std::invalid_argument);
  EXPECT_THROW(Mdp::Builder(1, 1, 0.9)
                   .add_outcome(0, 0, 0, 1.0, 0.0)
                   .set_terminal(0)
                   .build(),
               std::invalid_argument);
}

TEST(ActionValues, DeterministicTransition) {
  const Mdp mdp = Mdp::Builder(2, 1, 0.9).add_outcome(0, 0, 1, 1.0, 3.0).add_outcome(1, 0, 1, 1.0, 0.0).build();
  const std::vector<double> v{0.0, 5.0};
  EXPECT_DOUBLE_EQ(action_values(mdp, v)(0, 0), 3.0 + 0.9 * 5.0);
}

TEST(ActionValues, TerminalSuccessorGivesImmediateReward) {
  const Mdp mdp = Mdp::Builder(2, 2, 0.9)
                      .add_outcome(0, 0, 1, 1.0, 3.0)
                      .add_outcome(0, 1, 1, 1.0, -2.0)
                      .set_terminal(1)
                      .build();
  const ValueTable v = evaluate_policy(mdp, TabularPolicy(2, 2));
  const QTable q = action_values(mdp, v);
  EXPECT_DOUBLE_EQ(q(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(q(0, 1), -2.0);
  EXPECT_EQ(v[1], 0.0);
}

TEST(ActionValues, PolicyWeightedQEqualsV) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Mdp mdp = random_mdp(rng, 12, 4, 0.9);
    const TabularPolicy pi = random_policy(rng, 12, 4);
    const ValueTable v = evaluate_policy(mdp, pi);
    const QTable q = action_values(mdp, v);
    for (StateId s = 0; s < 12; ++s) {
      double sum = 0.0;
      for (ActionId a = 0; a < 4; ++a) sum += pi(s, a) * q(s, a);
      EXPECT_NEAR(sum, v[s], 1e-9);
    }
  }
}

TEST(Advantage, UniformTwoActions) {
  QTable q(1, 2);
  q(0, 0) = 1.0;
  q(0, 1) = 3.0;
  const ATable a = advantage(q, TabularPolicy(1, 2));
  EXPECT_DOUBLE_EQ(a(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(a(0, 1), 1.0);
}

TEST(Advantage, ChosenActionOfDeterministicPolicyIsZero) {
  std::mt19937_64 rng(4);
  const Mdp mdp = random_mdp(rng, 8, 3, 0.9);
  const std::vector<ActionId> actions{0, 1, 2, 0, 1, 2, 0, 1};
  const TabularPolicy pi = TabularPolicy::deterministic(actions, 3);
  const ATable a = advantage(action_values(mdp, evaluate_policy(mdp, pi)), pi);
  for (StateId s = 0; s < 8; ++s) EXPECT_EQ(a(s, actions[s]), 0.0);
}

TEST(Advantage, PolicyWeightedSumIsZeroProperty) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 2 + trial, m = 1 + trial % 5;
    const Mdp mdp = random_mdp(rng, n, m, 0.5 + 0.019 * trial);
    const TabularPolicy pi = random_policy(rng, n, m);
    const ATable a = advantage(action_values(mdp, evaluate_policy(mdp, pi)), pi);
    for (StateId s = 0; s < n; ++s) {
      double sum = 0.0;
      for (ActionId b = 0; b < m; ++b) sum += pi(s, b) * a(s, b);
      EXPECT_NEAR(sum, 0.0, 1e-9);
    }
  }
}

// Brute-force Monte-Carlo estimate of Q at the dog-grid start under the
// uniform policy, compared against the exact advantage.
TEST(Advantage, DogGridStartMatchesMonteCarlo) {
  const DogGrid grid = build_dog_grid();
  const TabularPolicy pi(grid.mdp.num_states(), kGridActions);
  const ValueTable v = evaluate_policy(grid.mdp, pi);
  const QTable q = action_values(grid.mdp, v);
  const ATable adv = advantage(q, pi);
  const StateId start = grid.world.start_state();

  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<ActionId> uniform_action(0, kGridActions - 1);
  constexpr int kRollouts = 100000;
  std::array<double, kGridActions> mean{}, m2{};
  for (ActionId first = 0; first < kGridActions; ++first) {
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < kRollouts; ++i) {
      StateId s = start;
      ActionId a = first;
      double ret = 0.0, discount = 1.0;
      // Truncation bias at 2000 steps is below 0.99^2000 * 20 / 0.01 < 1e-4.
      for (int step = 0; step < 2000 && !grid.mdp.is_terminal(s); ++step) {
        const Outcome& o = grid.mdp.outcomes(s, a)[0];
        ret += discount * o.reward;
        discount *= grid.mdp.gamma();
        s = o.next;
        a = uniform_action(rng);
      }
      sum += ret;
      sum_sq += ret * ret;
    }
    mean[first] = sum / kRollouts;
    m2[first] = (sum_sq / kRollouts - mean[first] * mean[first]) / kRollouts;
  }
  for (ActionId a = 0; a < kGridActions; ++a) {
    EXPECT_NEAR(mean[a], q(start, a), 3.0 * std::sqrt(m2[a])) << "action " << a;
  }
  // The advantage estimate inherits the same error bound through the mean.
  double v_mc = 0.0;
  for (ActionId a = 0; a < kGridActions; ++a) v_mc += 0.25 * mean[a];
  for (ActionId a = 0; a < kGridActions; ++a) {
    EXPECT_NEAR(mean[a] - v_mc, adv(start, a), 6.0 * std::sqrt(m2[a]));
  }
}

TEST(TdError, Examples) {
  const std::vector<double> zero{0.0, 0.0};
  EXPECT_EQ(td_error(zero, 1.0, 0, 1, 0.9), 1.0);
  const std::vector<double> v{2.5, 7.0};
  EXPECT_EQ(td_error(v, 2.5, 0, 1, 0.0), 0.0);
}

TEST(TdError, ExpectationEqualsAdvantage) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const Mdp mdp = random_mdp(rng, 10, 3, 0.9);
    const TabularPolicy pi = random_policy(rng, 10, 3);
    const ValueTable v = evaluate_policy(mdp, pi);
    const ATable adv = advantage(action_values(mdp, v), pi);
    for (StateId s = 0; s < 10; ++s) {
      for (ActionId a = 0; a < 3; ++a) {
        double expected = 0.0;
        for (const Outcome& o : mdp.outcomes(s, a)) {
          expected += o.probability * td_error(v, o.reward, s, o.next, mdp.gamma());
        }
        EXPECT_NEAR(expected, adv(s, a), 1e-9);
      }
    }
  }
}

TEST(ValueIteration, SingleStateTwoActions) {
  const Mdp mdp =
      Mdp::Builder(1, 2, 0.9).add_outcome(0, 0, 0, 1.0, 0.0).add_outcome(0, 1, 0, 1.0, 5.0).build();
  const OptimalSolution sol = value_iteration(mdp);
  EXPECT_NEAR(sol.values[0], 50.0, 1e-8);
  EXPECT_EQ(sol.policy(0, 1), 1.0);
}

TEST(ValueIteration, ZeroDiscountIsImmediateArgmax) {
  std::mt19937_64 rng(12);
  const Mdp mdp = random_mdp(rng, 9, 4, 0.0);
  const OptimalSolution sol = value_iteration(mdp);
  for (StateId s = 0; s < 9; ++s) {
    ActionId best = 0;
    for (ActionId a = 1; a < 4; ++a) {
      if (mdp.expected_reward(s, a) > mdp.expected_reward(s, best) + kTieTolerance) best = a;
    }
    EXPECT_EQ(sol.policy(s, best), 1.0);
  }
}

TEST(ValueIteration, PolicyCannotBeImprovedByOneStepDeviation) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const Mdp mdp = random_mdp(rng, 15, 4, 0.95);
    const OptimalSolution sol = value_iteration(mdp);
    const ValueTable v = evaluate_policy(mdp, sol.policy);
    const QTable q = action_values(mdp, v);
    for (StateId s = 0; s < 15; ++s) {
      for (ActionId a = 0; a < 4; ++a) EXPECT_LE(q(s, a), v[s] + 1e-8);
      EXPECT_NEAR(v[s], sol.values[s], 1e-8);
    }
  }
}

TEST(ValueIteration, UndiscountedLoopThrows) {
  const Mdp mdp = Mdp::Builder(1, 1, 1.0).add_outcome(0, 0, 0, 1.0, 1.0).build();
  EXPECT_THROW(value_iteration(mdp, 1e-10, 1000), ConvergenceError);
}

TEST(GreedyActions, TiesGoToLowestIndex) {
  const std::vector<double> row{1.0, 3.0, 3.0 + 1e-12, 2.0};
  EXPECT_EQ(optimal_action_set(row), (std::vector<ActionId>{1, 2}));
  ActionTable t(1, 4);
  for (ActionId a = 0; a < 4; ++a) t(0, a) = row[a];
  EXPECT_EQ(greedy_actions(t)[0], 1u);
}
