#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "coachlab/config.hpp"

namespace coachlab {

struct ExperimentResult {
  std::string name;
  bool passed = false;
  /// One line of measured values.
  std::string detail;
  double seconds = 0.0;
};

/// Sum_a pi A = 0 and E[td_error] = A on random MDPs.
ExperimentResult advantage_identity_experiment(std::size_t num_mdps = 100, std::uint64_t seed = 1);

/// Score against central finite differences of log pi.
ExperimentResult gradient_check_experiment(std::size_t num_triples = 1000, std::uint64_t seed = 2);

/// COACH with one trace, lambda 0 and no delay against the plain update.
ExperimentResult tabular_reduction_experiment(std::size_t num_steps = 1000, std::uint64_t seed = 3);

/// The advantage-oracle run on the canonical dog grid shared by the
/// convergence and diminishing-returns checks.
SessionConfig convergence_config();

struct ConvergenceReport {
  std::size_t seeds = 0;
  std::size_t passed = 0;
  std::size_t return_ok = 0;
  std::size_t policy_ok = 0;
  /// Mean |feedback| per 100-step window over steps whose action was the
  /// learner's greedy action and optimal, pooled over seeds.
  std::vector<double> window_feedback;
  double seconds = 0.0;
};

ConvergenceReport run_convergence(std::size_t seeds = 100, std::size_t window = 100);
ExperimentResult convergence_experiment(const ConvergenceReport& report);
ExperimentResult diminishing_returns_experiment(const ConvergenceReport& report);

/// Oracle feedback for the middle action changes sign as training moves the
/// bandit policy from the worst action to the best.
ExperimentResult sign_flip_experiment();

/// Scripted ball/cylinder scenario contrasting TAMER and COACH.
ExperimentResult tamer_unlearning_experiment();

ExperimentResult credit_window_experiment();
ExperimentResult feature_pipeline_experiment();

/// Repeated runs of the same (config, seed) produce identical log digests.
ExperimentResult determinism_experiment();

struct NamedExperiment {
  std::string name;
  std::function<std::vector<ExperimentResult>()> run;
};

/// Every experiment hosted by the core library, in report order. The
/// real-time soak lives with the service.
std::vector<NamedExperiment> core_experiments();

std::string format_result(const ExperimentResult& result);

}  // namespace coachlab
