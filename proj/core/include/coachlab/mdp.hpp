#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace coachlab {

using StateId = std::size_t;
using ActionId = std::size_t;

/// Raised when an iterative solver hits its iteration cap without meeting
/// its residual tolerance (e.g. gamma = 1 on a continuing task).
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Outcome {
  StateId next;
  double probability;
  double reward;
};

/// Finite MDP with explicit transition and reward tables.
///
/// Outcomes for each (s, a) are stored contiguously. Terminal states are
/// absorbing: every action self-loops with reward 0. Instances are immutable
/// once built and may be shared freely between threads.
class Mdp {
 public:
  class Builder;

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }
  double gamma() const { return gamma_; }
  bool is_terminal(StateId s) const { return terminal_.at(s) != 0; }

  std::span<const Outcome> outcomes(StateId s, ActionId a) const;
  double expected_reward(StateId s, ActionId a) const;

 private:
  Mdp() = default;

  std::size_t num_states_ = 0;
  std::size_t num_actions_ = 0;
  double gamma_ = 0.0;
  std::vector<std::size_t> offsets_;
  std::vector<Outcome> outcomes_;
  std::vector<char> terminal_;
};

class Mdp::Builder {
 public:
  Builder(std::size_t num_states, std::size_t num_actions, double gamma);

  Builder& add_outcome(StateId s, ActionId a, StateId next, double probability, double reward);
  Builder& set_terminal(StateId s);

  /// Validates and freezes the tables. Throws std::invalid_argument when a
  /// non-terminal (s, a) has no outcomes, a distribution does not sum to 1
  /// within 1e-12, or outcomes were given for a terminal state.
  Mdp build() const;

 private:
  std::size_t num_states_;
  std::size_t num_actions_;
  double gamma_;
  std::vector<std::vector<Outcome>> rows_;
  std::vector<char> terminal_;
};

/// Per-state action distribution, stored row-major.
class TabularPolicy {
 public:
  /// Uniform policy.
  TabularPolicy(std::size_t num_states, std::size_t num_actions);
  TabularPolicy(std::size_t num_states, std::size_t num_actions, std::vector<double> probs);

  static TabularPolicy deterministic(std::span<const ActionId> actions, std::size_t num_actions);

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }

  double operator()(StateId s, ActionId a) const { return probs_[s * num_actions_ + a]; }
  std::span<const double> row(StateId s) const;
  void set_row(StateId s, std::span<const double> probs);

  const std::vector<double>& data() const { return probs_; }

 private:
  std::size_t num_states_;
  std::size_t num_actions_;
  std::vector<double> probs_;
};

using ValueTable = std::vector<double>;

/// Dense (state, action) table; used for both Q^pi and A^pi.
class ActionTable {
 public:
  ActionTable(std::size_t num_states, std::size_t num_actions, double fill = 0.0)
      : num_states_(num_states), num_actions_(num_actions), values_(num_states * num_actions, fill) {}

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }

  double& operator()(StateId s, ActionId a) { return values_[s * num_actions_ + a]; }
  double operator()(StateId s, ActionId a) const { return values_[s * num_actions_ + a]; }
  std::span<const double> row(StateId s) const {
    return {values_.data() + s * num_actions_, num_actions_};
  }

 private:
  std::size_t num_states_;
  std::size_t num_actions_;
  std::vector<double> values_;
};

using QTable = ActionTable;
using ATable = ActionTable;

struct EvaluationOptions {
  double tol = 1e-10;
  std::size_t max_iterations = 1'000'000;
  /// Warm start; must have one entry per state when non-empty.
  std::span<const double> initial;
};

/// Iterative in-place policy evaluation. The result satisfies a max-norm
/// Bellman residual <= tol; terminal states are 0.
ValueTable evaluate_policy(const Mdp& mdp, const TabularPolicy& pi, const EvaluationOptions& options);
ValueTable evaluate_policy(const Mdp& mdp, const TabularPolicy& pi, double tol = 1e-10);

/// max_s |(T^pi V)(s) - V(s)|
double bellman_residual(const Mdp& mdp, const TabularPolicy& pi, std::span<const double> values);

/// Q(s,a) = sum_s' T(s'|s,a) [R(s,a,s') + gamma V(s')]
QTable action_values(const Mdp& mdp, std::span<const double> values);

/// A(s,a) = Q(s,a) - sum_a' pi(s,a') Q(s,a')
ATable advantage(const QTable& q, const TabularPolicy& pi);

inline double td_error(std::span<const double> values, double reward, StateId s_prev, StateId s_next,
                       double gamma) {
  return reward + gamma * values[s_next] - values[s_prev];
}

/// Default absolute tolerance under which two action values count as tied.
inline constexpr double kTieTolerance = 1e-9;

/// Lowest-index argmax of each row; values within tie_tol of the row max tie.
std::vector<ActionId> greedy_actions(const ActionTable& table, double tie_tol = kTieTolerance);

/// Actions whose value is within tie_tol of the row maximum.
std::vector<ActionId> optimal_action_set(std::span<const double> row, double tie_tol = kTieTolerance);

struct OptimalSolution {
  ValueTable values;
  QTable q;
  TabularPolicy policy;
};

/// Value iteration to Bellman-optimality residual <= tol. The returned
/// policy is greedy w.r.t. the returned values, ties to the lowest action.
OptimalSolution value_iteration(const Mdp& mdp, double tol = 1e-10, std::size_t max_iterations = 1'000'000);

}  // namespace coachlab
