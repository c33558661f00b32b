#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include "coachlab/coach.hpp"
#include "coachlab/gridworld.hpp"
#include "coachlab/policy.hpp"
#include "coachlab/trainers.hpp"

namespace coachlab {

/// Invalid or unknown configuration; the CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Scenario { dog_grid, policy_shaping };
enum class LearnerKind { coach, tamer };
enum class FeatureKind { tabular, visual };

std::string_view to_string(Scenario s);
std::string_view to_string(LearnerKind k);
std::string_view to_string(FeatureKind k);

struct TamerSettings {
  double alpha = 0.5;
  double window_min = 0.2;  // seconds
  double window_max = 0.8;
  /// Starting value of every reward-model weight.
  double initial_estimate = 0.0;
};

struct ServiceSettings {
  std::size_t cycle_ms = 33;
  /// Untagged feedback with |value| at or above this maps to +-4 on the long trace.
  double strong_threshold = 40.0;
  std::size_t client_queue_limit = 64;
};

/// Everything a session needs. Parsed from a flat key = value file; every
/// key is optional and unknown keys are rejected.
struct SessionConfig {
  Scenario scenario = Scenario::dog_grid;
  /// Layout, rewards and discount of the dog grid (`map`, `grid.*` keys).
  GridConfig grid;
  LearnerKind learner = LearnerKind::coach;
  FeatureKind features = FeatureKind::tabular;
  std::size_t steps = 5000;
  CoachConfig coach;
  BiasMode bias_mode = BiasMode::none;
  TamerSettings tamer;
  TrainerConfig trainer;
  std::size_t eval_every = 50;
  double step_period = 0.033;  // seconds of simulated time per step
  std::size_t max_episode_steps = 100;
  ServiceSettings service;

  /// Throws ConfigError.
  void validate() const;
};

/// Parses `key = value` lines. `#` starts a comment; `[section]` headers
/// prefix the keys that follow with `section.`. Strings may be quoted.
/// A relative `map` path is resolved against base_dir.
SessionConfig parse_session_config(std::string_view text, const std::string& base_dir = "");
SessionConfig load_session_config(const std::string& path);

/// Canonical text: every key, sorted, doubles at round-trip precision.
/// parse_session_config(to_config_text(c)) reproduces c.
std::string to_config_text(const SessionConfig& config);
std::string config_digest(const SessionConfig& config);

}  // namespace coachlab
