#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "coachlab/mdp.hpp"

namespace coachlab {

/// Feedback model of an oracle trainer.
///  - advantage: A^pi(s,a) of the learner's current policy
///  - qvalue: Q^pi(s,a) of the learner's current policy
///  - reward_exemplar: Q*(s,a), fixed regardless of the learner
///  - none: never gives feedback
enum class TrainerKind { none, advantage, qvalue, reward_exemplar };
enum class Quantizer { none, human_scale, sign };

TrainerKind parse_trainer_kind(std::string_view name);
std::string_view to_string(TrainerKind kind);
Quantizer parse_quantizer(std::string_view name);
std::string_view to_string(Quantizer q);

struct TrainerConfig {
  TrainerKind kind = TrainerKind::advantage;
  /// Probability that a step receives feedback at all.
  double sparsity = 1.0;
  Quantizer quantize = Quantizer::none;
  double quantize_epsilon = 0.01;
  double quantize_big = 1.0;
  double scale = 1.0;
  /// Feedback for step t is delivered at step t + delay_steps.
  std::size_t delay_steps = 0;
  /// Evaluate against the learner policy as it was this many steps ago.
  std::size_t staleness = 0;
  double eval_tol = 1e-10;

  void validate() const;
};

/// Maps a real-valued judgement onto the {-1, +1, +4} button set. Values with
/// |f| <= epsilon produce no feedback.
std::optional<double> human_scale_quantize(double f, double epsilon = 0.01, double big = 1.0);

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct OracleFeedback {
  double value;
  /// Step the feedback judges; earlier than the delivery step when delayed.
  std::size_t judged_step;
};

/// Oracle that peeks at the learner's policy and the true MDP.
///
/// Wrappers run in the order sparsity -> quantize -> delay. All randomness
/// comes from the seeded generator owned by the trainer, so identical
/// inputs replay identically.
class OracleTrainer {
 public:
  OracleTrainer(const Mdp& mdp, TrainerConfig config, std::uint64_t seed);

  const TrainerConfig& config() const { return config_; }

  /// Unwrapped feedback for (s, a) under the given policy snapshot.
  double raw_feedback(const TabularPolicy& policy, StateId s, ActionId a);

  /// Observes the learner taking a at s on step t and returns the feedback
  /// due for delivery on step t. `policy` may be null for kinds that do not
  /// depend on the learner.
  std::vector<OracleFeedback> observe(std::size_t t, const TabularPolicy* policy, StateId s, ActionId a);

  bool needs_policy() const {
    return config_.kind == TrainerKind::advantage || config_.kind == TrainerKind::qvalue;
  }

 private:
  struct Pending {
    std::size_t due;
    OracleFeedback feedback;
  };

  const QTable& learner_q(const TabularPolicy& policy);

  const Mdp& mdp_;
  TrainerConfig config_;
  std::mt19937_64 rng_;
  std::optional<QTable> optimal_q_;
  std::deque<TabularPolicy> snapshots_;
  std::vector<double> warm_values_;
  std::optional<QTable> cached_q_;
  std::vector<double> cached_policy_;
  std::deque<Pending> pending_;
};

/// One-step decision with three actions whose immediate rewards are
/// `rewards`; every action ends the episode.
Mdp build_policy_shaping_scenario(std::array<double, 3> rewards = {1.0, 2.0, 3.0}, double gamma = 0.99);

}  // namespace coachlab
