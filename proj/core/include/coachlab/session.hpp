#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "coachlab/coach.hpp"
#include "coachlab/config.hpp"
#include "coachlab/gridworld.hpp"
#include "coachlab/mdp.hpp"
#include "coachlab/policy.hpp"
#include "coachlab/session_log.hpp"
#include "coachlab/tamer.hpp"

namespace coachlab {

/// The task a session trains on: the true MDP (used only by oracles and for
/// evaluation), the state features the learner sees, and the start state.
struct Environment {
  Mdp mdp;
  /// Present for the dog grid only.
  std::optional<GridWorld> world;
  StateId start = 0;
  std::unique_ptr<FeatureMap> features;

  std::size_t num_states() const { return mdp.num_states(); }
  std::size_t num_actions() const { return mdp.num_actions(); }

  /// Samples s' from the transition distribution of (s, a).
  Outcome sample(StateId s, ActionId a, std::mt19937_64& rng) const;
};

/// Throws ConfigError for combinations the scenario cannot host.
Environment make_environment(const SessionConfig& config);

struct Decision {
  ActionId action;
  /// The learner's greedy action at decision time.
  ActionId greedy;
  /// values_hash of pi(s, .) for COACH, of the reward estimates for TAMER.
  std::string policy_hash;
};

/// A learner bound to an environment's features. Each decision cycle is
/// decide() followed by one feedback() call carrying whatever feedback
/// arrived in the cycle (possibly none).
class Agent {
 public:
  virtual ~Agent() = default;

  virtual Decision decide(StateId s, Timestamp now, std::mt19937_64& rng) = 0;
  /// Records an action chosen outside the learner (a scripted demonstration)
  /// so that feedback is credited to it.
  virtual Decision impose(StateId s, ActionId a, Timestamp now) = 0;
  virtual void feedback(std::span<const FeedbackEvent> events, Timestamp now) = 0;
  virtual void begin_episode() = 0;

  /// Action distribution per state as the learner would act now.
  virtual TabularPolicy current_policy() const = 0;
  /// Deterministic greedy policy per state.
  virtual TabularPolicy greedy_policy() const = 0;
  virtual std::span<const double> parameters() const = 0;
};

/// Softmax policy trained by real-time COACH; actions are sampled.
class CoachAgent final : public Agent {
 public:
  CoachAgent(const FeatureMap& features, std::size_t num_states, std::size_t num_actions, CoachConfig config,
             BiasMode bias = BiasMode::none);

  Decision decide(StateId s, Timestamp now, std::mt19937_64& rng) override;
  Decision impose(StateId s, ActionId a, Timestamp now) override;
  void feedback(std::span<const FeedbackEvent> events, Timestamp now) override;
  void begin_episode() override { learner_.begin_episode(); }
  TabularPolicy current_policy() const override;
  TabularPolicy greedy_policy() const override;
  std::span<const double> parameters() const override { return learner_.policy().parameters(); }

  const CoachLearner& learner() const { return learner_; }
  StepStatus last_status() const { return last_status_; }

 private:
  const FeatureMap& features_;
  std::size_t num_states_;
  CoachLearner learner_;
  std::vector<double> x_;
  StepStatus last_status_ = StepStatus::no_feedback;
};

/// Reward model trained by TAMER; acts greedily on the estimates.
class TamerAgent final : public Agent {
 public:
  TamerAgent(const FeatureMap& features, std::size_t num_states, std::size_t num_actions, const TamerSettings& settings,
             Timestamp step_period);

  Decision decide(StateId s, Timestamp now, std::mt19937_64& rng) override;
  Decision impose(StateId s, ActionId a, Timestamp now) override;
  void feedback(std::span<const FeedbackEvent> events, Timestamp now) override;
  void begin_episode() override {}
  TabularPolicy current_policy() const override { return greedy_policy(); }
  TabularPolicy greedy_policy() const override;
  std::span<const double> parameters() const override { return learner_.model().parameters(); }

  const TamerLearner& learner() const { return learner_; }

 private:
  const FeatureMap& features_;
  std::size_t num_states_;
  TamerLearner learner_;
  std::vector<double> x_;
};

std::unique_ptr<Agent> make_agent(const SessionConfig& config, const Environment& env);

/// Simulated time of step t.
Timestamp step_time(std::size_t t, double step_period);

/// Exact discounted return of `policy` from the environment's start state.
double evaluate_return(const Environment& env, const TabularPolicy& policy, double tol = 1e-10);

struct SessionResult {
  SessionLog log;
  /// Greedy policy after the last step.
  TabularPolicy greedy;
  std::vector<double> parameters;
  /// States the agent decided in during training.
  std::set<StateId> visited;
  /// Raw feedback value delivered on each step (0 when none).
  std::vector<double> feedback;
  /// Whether the action taken on each step was in the optimal action set.
  std::vector<char> took_optimal;
  /// Whether the action taken was both the greedy and an optimal action.
  std::vector<char> adopted_optimal;
};

/// Runs an oracle-trained session. Deterministic given (config, seed). A
/// fault inside the learning loop marks the log aborted and keeps the steps
/// completed so far; an invalid config throws ConfigError before any step.
SessionResult run_session_detailed(const SessionConfig& config, std::uint64_t seed);
SessionLog run_session(const SessionConfig& config, std::uint64_t seed);

}  // namespace coachlab
