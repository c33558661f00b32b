#include "coachlab/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace coachlab {

namespace {

constexpr double kDistributionTolerance = 1e-12;

void check_row_sum(std::span<const double> row, const char* what) {
  double sum = 0.0;
  for (double p : row) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument(std::string(what) + ": negative or non-finite probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kDistributionTolerance) {
    throw std::invalid_argument(std::string(what) + ": probabilities sum to " + std::to_string(sum));
  }
}

double policy_backup(const Mdp& mdp, const TabularPolicy& pi, std::span<const double> values, StateId s) {
  const double gamma = mdp.gamma();
  double v = 0.0;
  for (ActionId a = 0; a < mdp.num_actions(); ++a) {
    const double p_a = pi(s, a);
    if (p_a == 0.0) continue;
    double q = 0.0;
    for (const Outcome& o : mdp.outcomes(s, a)) q += o.probability * (o.reward + gamma * values[o.next]);
    v += p_a * q;
  }
  return v;
}

double optimal_backup(const Mdp& mdp, std::span<const double> values, StateId s) {
  const double gamma = mdp.gamma();
  double best = -std::numeric_limits<double>::infinity();
  for (ActionId a = 0; a < mdp.num_actions(); ++a) {
    double q = 0.0;
    for (const Outcome& o : mdp.outcomes(s, a)) q += o.probability * (o.reward + gamma * values[o.next]);
    best = std::max(best, q);
  }
  return best;
}

void check_policy_shape(const Mdp& mdp, const TabularPolicy& pi) {
  if (pi.num_states() != mdp.num_states() || pi.num_actions() != mdp.num_actions()) {
    throw std::invalid_argument("policy shape does not match MDP");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Mdp

std::span<const Outcome> Mdp::outcomes(StateId s, ActionId a) const {
  const std::size_t row = s * num_actions_ + a;
  return {outcomes_.data() + offsets_[row], offsets_[row + 1] - offsets_[row]};
}

double Mdp::expected_reward(StateId s, ActionId a) const {
  double r = 0.0;
  for (const Outcome& o : outcomes(s, a)) r += o.probability * o.reward;
  return r;
}

Mdp::Builder::Builder(std::size_t num_states, std::size_t num_actions, double gamma)
    : num_states_(num_states),
      num_actions_(num_actions),
      gamma_(gamma),
      rows_(num_states * num_actions),
      terminal_(num_states, 0) {
  if (num_states == 0 || num_actions == 0) throw std::invalid_argument("MDP needs at least one state and action");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0, 1]");
}

Mdp::Builder& Mdp::Builder::add_outcome(StateId s, ActionId a, StateId next, double probability, double reward) {
  if (s >= num_states_ || next >= num_states_ || a >= num_actions_) throw std::out_of_range("MDP index out of range");
  if (!std::isfinite(reward)) throw std::invalid_argument("reward must be finite");
  rows_[s * num_actions_ + a].push_back({next, probability, reward});
  return *this;
}

Mdp::Builder& Mdp::Builder::set_terminal(StateId s) {
  terminal_.at(s) = 1;
  return *this;
}

Mdp Mdp::Builder::build() const {
  Mdp mdp;
  mdp.num_states_ = num_states_;
  mdp.num_actions_ = num_actions_;
  mdp.gamma_ = gamma_;
  mdp.terminal_ = terminal_;
  mdp.offsets_.reserve(rows_.size() + 1);
  mdp.offsets_.push_back(0);
  std::vector<double> probs;
  for (StateId s = 0; s < num_states_; ++s) {
    for (ActionId a = 0; a < num_actions_; ++a) {
      const auto& row = rows_[s * num_actions_ + a];
      if (terminal_[s]) {
        if (!row.empty()) throw std::invalid_argument("terminal state " + std::to_string(s) + " has outcomes");
        mdp.outcomes_.push_back({s, 1.0, 0.0});
      } else {
        if (row.empty()) {
          throw std::invalid_argument("no outcomes for state " + std::to_string(s) + " action " + std::to_string(a));
        }
        probs.clear();
        for (const Outcome& o : row) probs.push_back(o.probability);
        check_row_sum(probs, "transition distribution");
        mdp.outcomes_.insert(mdp.outcomes_.end(), row.begin(), row.end());
      }
      mdp.offsets_.push_back(mdp.outcomes_.size());
    }
  }
  return mdp;
}

// ---------------------------------------------------------------------------
// TabularPolicy

TabularPolicy::TabularPolicy(std::size_t num_states, std::size_t num_actions)
    : num_states_(num_states),
      num_actions_(num_actions),
      probs_(num_states * num_actions, num_actions ? 1.0 / static_cast<double>(num_actions) : 0.0) {
  if (num_actions == 0) throw std::invalid_argument("policy needs at least one action");
}

TabularPolicy::TabularPolicy(std::size_t num_states, std::size_t num_actions, std::vector<double> probs)
    : num_states_(num_states), num_actions_(num_actions), probs_(std::move(probs)) {
  if (num_actions == 0) throw std::invalid_argument("policy needs at least one action");
  if (probs_.size() != num_states * num_actions) throw std::invalid_argument("policy table has wrong size");
  for (StateId s = 0; s < num_states_; ++s) check_row_sum(row(s), "policy row");
}

TabularPolicy TabularPolicy::deterministic(std::span<const ActionId> actions, std::size_t num_actions) {
  std::vector<double> probs(actions.size() * num_actions, 0.0);
  for (std::size_t s = 0; s < actions.size(); ++s) {
    if (actions[s] >= num_actions) throw std::out_of_range("action index out of range");
    probs[s * num_actions + actions[s]] = 1.0;
  }
  return TabularPolicy(actions.size(), num_actions, std::move(probs));
}

std::span<const double> TabularPolicy::row(StateId s) const {
  return {probs_.data() + s * num_actions_, num_actions_};
}

void TabularPolicy::set_row(StateId s, std::span<const double> probs) {
  if (probs.size() != num_actions_) throw std::invalid_argument("policy row has wrong size");
  check_row_sum(probs, "policy row");
  std::copy(probs.begin(), probs.end(), probs_.begin() + static_cast<std::ptrdiff_t>(s * num_actions_));
}

// ---------------------------------------------------------------------------
// Evaluation

double bellman_residual(const Mdp& mdp, const TabularPolicy& pi, std::span<const double> values) {
  double residual = 0.0;
  for (StateId s = 0; s < mdp.num_states(); ++s) {
    if (mdp.is_terminal(s)) {
      residual = std::max(residual, std::abs(values[s]));
      continue;
    }
    residual = std::max(residual, std::abs(policy_backup(mdp, pi, values, s) - values[s]));
  }
  return residual;
}

ValueTable evaluate_policy(const Mdp& mdp, const TabularPolicy& pi, const EvaluationOptions& options) {
  check_policy_shape(mdp, pi);
  if (!(options.tol > 0.0)) throw std::invalid_argument("tolerance must be positive");

  ValueTable values(mdp.num_states(), 0.0);
  if (!options.initial.empty()) {
    if (options.initial.size() != values.size()) throw std::invalid_argument("warm start has wrong size");
    std::copy(options.initial.begin(), options.initial.end(), values.begin());
  }
  for (StateId s = 0; s < mdp.num_states(); ++s) {
    if (mdp.is_terminal(s)) values[s] = 0.0;
  }

  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    double delta = 0.0;
    for (StateId s = 0; s < mdp.num_states(); ++s) {
      if (mdp.is_terminal(s)) continue;
      const double v = policy_backup(mdp, pi, values, s);
      delta = std::max(delta, std::abs(v - values[s]));
      values[s] = v;
    }
    if (!std::isfinite(delta)) break;
    if (delta <= options.tol && bellman_residual(mdp, pi, values) <= options.tol) return values;
  }
  throw ConvergenceError("policy evaluation did not converge within " + std::to_string(options.max_iterations) +
                         " sweeps");
}

ValueTable evaluate_policy(const Mdp& mdp, const TabularPolicy& pi, double tol) {
  EvaluationOptions options;
  options.tol = tol;
  return evaluate_policy(mdp, pi, options);
}

QTable action_values(const Mdp& mdp, std::span<const double> values) {
  if (values.size() != mdp.num_states()) throw std::invalid_argument("value table has wrong size");
  QTable q(mdp.num_states(), mdp.num_actions());
  const double gamma = mdp.gamma();
  for (StateId s = 0; s < mdp.num_states(); ++s) {
    for (ActionId a = 0; a < mdp.num_actions(); ++a) {
      double sum = 0.0;
      for (const Outcome& o : mdp.outcomes(s, a)) sum += o.probability * (o.reward + gamma * values[o.next]);
      q(s, a) = sum;
    }
  }
  return q;
}

ATable advantage(const QTable& q, const TabularPolicy& pi) {
  if (q.num_states() != pi.num_states() || q.num_actions() != pi.num_actions()) {
    throw std::invalid_argument("Q table and policy shapes differ");
  }
  ATable a(q.num_states(), q.num_actions());
  for (StateId s = 0; s < q.num_states(); ++s) {
    double v = 0.0;
    for (ActionId b = 0; b < q.num_actions(); ++b) v += pi(s, b) * q(s, b);
    for (ActionId b = 0; b < q.num_actions(); ++b) a(s, b) = q(s, b) - v;
  }
  return a;
}

std::vector<ActionId> optimal_action_set(std::span<const double> row, double tie_tol) {
  const double best = *std::max_element(row.begin(), row.end());
  std::vector<ActionId> out;
  for (ActionId a = 0; a < row.size(); ++a) {
    if (row[a] >= best - tie_tol) out.push_back(a);
  }
  return out;
}

std::vector<ActionId> greedy_actions(const ActionTable& table, double tie_tol) {
  std::vector<ActionId> out(table.num_states());
  for (StateId s = 0; s < table.num_states(); ++s) out[s] = optimal_action_set(table.row(s), tie_tol).front();
  return out;
}

OptimalSolution value_iteration(const Mdp& mdp, double tol, std::size_t max_iterations) {
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  ValueTable values(mdp.num_states(), 0.0);

  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    double delta = 0.0;
    for (StateId s = 0; s < mdp.num_states(); ++s) {
      if (mdp.is_terminal(s)) continue;
      const double v = optimal_backup(mdp, values, s);
      delta = std::max(delta, std::abs(v - values[s]));
      values[s] = v;
    }
    if (!std::isfinite(delta)) break;
    if (delta > tol) continue;

    double residual = 0.0;
    for (StateId s = 0; s < mdp.num_states(); ++s) {
      if (mdp.is_terminal(s)) continue;
      residual = std::max(residual, std::abs(optimal_backup(mdp, values, s) - values[s]));
    }
    if (residual <= tol) {
      QTable q = action_values(mdp, values);
      const auto actions = greedy_actions(q);
      return {std::move(values), std::move(q), TabularPolicy::deterministic(actions, mdp.num_actions())};
    }
  }
  throw ConvergenceError("value iteration did not converge within " + std::to_string(max_iterations) + " sweeps");
}

}  // namespace coachlab
