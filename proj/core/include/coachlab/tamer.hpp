#pragma once

#include <chrono>
#include <cstddef>
#include <deque>
#include <span>
#include <vector>

#include "coachlab/coach.hpp"
#include "coachlab/mdp.hpp"

namespace coachlab {

/// Feedback received at time T is shared uniformly by the steps taken at
/// times t with min_age <= T - t <= max_age.
struct CreditWindow {
  Timestamp min_age = std::chrono::milliseconds(200);
  Timestamp max_age = std::chrono::milliseconds(800);
  Timestamp step_period = std::chrono::milliseconds(33);

  void validate() const;
};

struct Credit {
  std::size_t index;  // position in the step-time sequence
  double weight;
};

/// Uniform credit over the eligible steps. `step_times` must be
/// non-decreasing. Returns an empty vector when no step is eligible.
std::vector<Credit> credit_weights(Timestamp feedback_time, std::span<const Timestamp> step_times,
                                   const CreditWindow& window);

struct CreditedPair {
  std::span<const double> features;
  ActionId action;
  double weight;
};

/// Linear per-action estimate of the trainer's reward, H(s,a) = w_a . x(s).
class RewardModel {
 public:
  RewardModel(std::size_t feature_dim, std::size_t num_actions, double alpha, double initial_weight = 0.0);

  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t num_actions() const { return num_actions_; }
  double alpha() const { return alpha_; }
  void set_alpha(double alpha);

  std::span<const double> weights(ActionId a) const { return {weights_.data() + a * feature_dim_, feature_dim_}; }
  std::span<const double> parameters() const { return weights_; }

  double estimate(std::span<const double> x, ActionId a) const;
  std::vector<double> estimates(std::span<const double> x) const;

  /// Delta rule per credited pair: w_a += alpha * weight * (f - H(s,a)) x(s).
  /// Errors are computed against the model before any pair is applied.
  /// Throws std::invalid_argument on non-finite f.
  void update(std::span<const CreditedPair> credited, double f);

  /// Myopic greedy action, ties to the lowest index.
  ActionId act(std::span<const double> x) const;

 private:
  std::size_t feature_dim_;
  std::size_t num_actions_;
  double alpha_;
  std::vector<double> weights_;
};

/// Reward-exemplar learner with a time-windowed credit history.
class TamerLearner {
 public:
  TamerLearner(RewardModel model, CreditWindow window);

  const RewardModel& model() const { return model_; }
  RewardModel& mutable_model() { return model_; }
  const CreditWindow& window() const { return window_; }

  ActionId act(std::span<const double> x) const { return model_.act(x); }
  void record_decision(Timestamp time, std::span<const double> features, ActionId action);

  /// Credits f to the steps whose age falls inside the window. Returns the
  /// number of credited steps; zero means the feedback was discarded.
  std::size_t give_feedback(Timestamp time, double f);

  void clear_history() { history_.clear(); }

 private:
  struct Step {
    Timestamp time;
    std::vector<double> features;
    ActionId action;
  };

  RewardModel model_;
  CreditWindow window_;
  std::deque<Step> history_;
};

}  // namespace coachlab
