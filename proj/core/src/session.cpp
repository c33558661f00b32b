#include "coachlab/session.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "coachlab/digest.hpp"
#include "coachlab/trainers.hpp"
#include "coachlab/visual_features.hpp"

namespace coachlab {

namespace {

// Decorrelates the trainer's stream from the action-sampling stream.
constexpr std::uint64_t kTrainerSeedOffset = 0x9E3779B97F4A7C15ULL;

ActionId sample_action(std::span<const double> probs, std::mt19937_64& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (ActionId a = 0; a < probs.size(); ++a) {
    acc += probs[a];
    if (u < acc) return a;
  }
  // Rounding left u above the final cumulative sum.
  for (ActionId a = probs.size(); a-- > 0;) {
    if (probs[a] > 0.0) return a;
  }
  return 0;
}

}  // namespace

Outcome Environment::sample(StateId s, ActionId a, std::mt19937_64& rng) const {
  const auto outcomes = mdp.outcomes(s, a);
  if (outcomes.size() == 1) return outcomes.front();
  const double u = uniform01(rng);
  double acc = 0.0;
  for (const Outcome& o : outcomes) {
    acc += o.probability;
    if (u < acc) return o;
  }
  return outcomes.back();
}

Environment make_environment(const SessionConfig& config) {
  config.validate();
  if (config.scenario == Scenario::dog_grid) {
    DogGrid grid = build_dog_grid(config.grid);
    std::unique_ptr<FeatureMap> features;
    if (config.features == FeatureKind::visual) {
      features = std::make_unique<VisualGridFeatures>(grid.world);
    } else {
      features = std::make_unique<TabularFeatures>(grid.world.num_states());
    }
    const StateId start = grid.world.start_state();
    return Environment{std::move(grid.mdp), std::move(grid.world), start, std::move(features)};
  }
  if (config.features == FeatureKind::visual) {
    throw ConfigError("visual features need the dog_grid scenario");
  }
  Mdp mdp = build_policy_shaping_scenario({1.0, 2.0, 3.0}, config.grid.gamma);
  auto features = std::make_unique<TabularFeatures>(mdp.num_states());
  return Environment{std::move(mdp), std::nullopt, 0, std::move(features)};
}

CoachAgent::CoachAgent(const FeatureMap& features, std::size_t num_states, std::size_t num_actions,
                       CoachConfig config, BiasMode bias)
    : features_(features),
      num_states_(num_states),
      learner_(ParamPolicy(features.dimension(), num_actions, bias), std::move(config)),
      x_(features.dimension()) {}

Decision CoachAgent::decide(StateId s, Timestamp, std::mt19937_64& rng) {
  features_.features(s, x_);
  const std::vector<double> probs = learner_.policy().action_distribution(x_);
  const ActionId a = sample_action(probs, rng);
  learner_.record_decision(x_, a);
  const auto greedy = static_cast<ActionId>(std::max_element(probs.begin(), probs.end()) - probs.begin());
  return {a, greedy, values_hash(probs)};
}

Decision CoachAgent::impose(StateId s, ActionId a, Timestamp) {
  features_.features(s, x_);
  const std::vector<double> probs = learner_.policy().action_distribution(x_);
  if (a >= probs.size()) throw std::out_of_range("action out of range");
  learner_.record_decision(x_, a);
  const auto greedy = static_cast<ActionId>(std::max_element(probs.begin(), probs.end()) - probs.begin());
  return {a, greedy, values_hash(probs)};
}

void CoachAgent::feedback(std::span<const FeedbackEvent> events, Timestamp) {
  last_status_ = learner_.step(aggregate_feedback(events, learner_.config()));
}

TabularPolicy CoachAgent::current_policy() const { return tabulate(learner_.policy(), features_, num_states_); }

TabularPolicy CoachAgent::greedy_policy() const { return greedy_tabular(learner_.policy(), features_, num_states_); }

TamerAgent::TamerAgent(const FeatureMap& features, std::size_t num_states, std::size_t num_actions,
                       const TamerSettings& settings, Timestamp step_period)
    : features_(features),
      num_states_(num_states),
      learner_(RewardModel(features.dimension(), num_actions, settings.alpha, settings.initial_estimate),
               CreditWindow{std::chrono::duration_cast<Timestamp>(std::chrono::duration<double>(settings.window_min)),
                            std::chrono::duration_cast<Timestamp>(std::chrono::duration<double>(settings.window_max)),
                            step_period}),
      x_(features.dimension()) {}

Decision TamerAgent::decide(StateId s, Timestamp now, std::mt19937_64&) {
  features_.features(s, x_);
  const ActionId a = learner_.act(x_);
  learner_.record_decision(now, x_, a);
  return {a, a, values_hash(learner_.model().estimates(x_))};
}

Decision TamerAgent::impose(StateId s, ActionId a, Timestamp now) {
  features_.features(s, x_);
  if (a >= learner_.model().num_actions()) throw std::out_of_range("action out of range");
  const ActionId greedy = learner_.act(x_);
  learner_.record_decision(now, x_, a);
  return {a, greedy, values_hash(learner_.model().estimates(x_))};
}

void TamerAgent::feedback(std::span<const FeedbackEvent> events, Timestamp) {
  for (const FeedbackEvent& e : events) {
    if (e.value == 0.0 || !std::isfinite(e.value)) continue;
    learner_.give_feedback(e.arrival, e.value);
  }
}

TabularPolicy TamerAgent::greedy_policy() const {
  std::vector<ActionId> actions(num_states_);
  std::vector<double> x(features_.dimension());
  for (StateId s = 0; s < num_states_; ++s) {
    features_.features(s, x);
    actions[s] = learner_.act(x);
  }
  return TabularPolicy::deterministic(actions, learner_.model().num_actions());
}

std::unique_ptr<Agent> make_agent(const SessionConfig& config, const Environment& env) {
  if (config.learner == LearnerKind::coach) {
    return std::make_unique<CoachAgent>(*env.features, env.num_states(), env.num_actions(), config.coach,
                                        config.bias_mode);
  }
  return std::make_unique<TamerAgent>(*env.features, env.num_states(), env.num_actions(), config.tamer,
                                      step_time(1, config.step_period));
}

Timestamp step_time(std::size_t t, double step_period) {
  // Whole nanoseconds per step keep step times exactly periodic.
  const auto period = static_cast<std::int64_t>(std::llround(step_period * 1e9));
  return Timestamp{static_cast<std::int64_t>(t) * period};
}

double evaluate_return(const Environment& env, const TabularPolicy& policy, double tol) {
  return evaluate_policy(env.mdp, policy, tol)[env.start];
}

SessionResult run_session_detailed(const SessionConfig& config, std::uint64_t seed) {
  Environment env = make_environment(config);
  std::unique_ptr<Agent> agent = make_agent(config, env);
  OracleTrainer trainer(env.mdp, config.trainer, seed + kTrainerSeedOffset);
  const OptimalSolution optimal = value_iteration(env.mdp);

  LogHeader header;
  header.config_digest = config_digest(config);
  header.seed = seed;
  header.learner = std::string(to_string(config.learner));
  header.steps_requested = config.steps;

  SessionResult result{SessionLog(header), agent->greedy_policy(), {}, {}, {}, {}, {}};
  std::mt19937_64 rng(seed);
  StateId s = env.start;
  std::size_t episode = 0;
  std::size_t episode_steps = 0;
  std::vector<FeedbackEvent> events;

  try {
    for (std::size_t t = 0; t < config.steps; ++t) {
      const Timestamp now = step_time(t, config.step_period);
      const Decision decision = agent->decide(s, now, rng);
      result.visited.insert(s);

      std::optional<TabularPolicy> snapshot;
      if (trainer.needs_policy()) snapshot = agent->current_policy();
      events.clear();
      double delivered = 0.0;
      for (const OracleFeedback& f : trainer.observe(t, snapshot ? &*snapshot : nullptr, s, decision.action)) {
        const std::string& trace =
            config.learner == LearnerKind::coach ? config.coach.trace_for(f.value) : config.coach.default_trace;
        events.push_back({f.value, trace, now, FeedbackSource::oracle});
        delivered += f.value;
      }
      agent->feedback(events, now);

      StepRecord record;
      record.t = t;
      record.episode = episode;
      record.state = s;
      record.action = decision.action;
      if (!events.empty()) {
        const AggregatedFeedback agg = aggregate_feedback(events, config.coach);
        record.feedback = agg.value;
        record.trace_id = agg.trace_id;
      }
      record.policy_hash = decision.policy_hash;
      if (config.eval_every != 0 && (t + 1) % config.eval_every == 0) {
        record.eval_return = evaluate_return(env, agent->greedy_policy());
      }
      result.log.append(std::move(record));
      result.feedback.push_back(delivered);
      const auto best = optimal_action_set(optimal.q.row(s));
      const bool optimal_action = std::find(best.begin(), best.end(), decision.action) != best.end();
      result.took_optimal.push_back(optimal_action ? 1 : 0);
      result.adopted_optimal.push_back(optimal_action && decision.action == decision.greedy ? 1 : 0);

      const Outcome next = env.sample(s, decision.action, rng);
      s = next.next;
      ++episode_steps;
      if (env.mdp.is_terminal(s) || episode_steps >= config.max_episode_steps) {
        s = env.start;
        ++episode;
        episode_steps = 0;
        agent->begin_episode();
      }
    }
  } catch (const std::exception& e) {
    result.log.mutable_header().aborted = true;
    result.log.mutable_header().abort_reason = e.what();
  }
  result.greedy = agent->greedy_policy();
  result.parameters.assign(agent->parameters().begin(), agent->parameters().end());
  return result;
}

SessionLog run_session(const SessionConfig& config, std::uint64_t seed) {
  return run_session_detailed(config, seed).log;
}

}  // namespace coachlab
