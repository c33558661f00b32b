// Runs every acceptance experiment and prints one PASS/FAIL line each.
//
//   coachlab_acceptance                 all criteria
//   coachlab_acceptance --only NAME     one criterion
//   coachlab_acceptance --skip NAME     everything except NAME (repeatable)
//
// Exit status is 0 only when every selected criterion passes.

#include <cstdio>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "coachlab/experiments.hpp"
#include "coachlab/training_session.hpp"

using namespace coachlab;

int main(int argc, char** argv) {
  std::optional<std::string> only;
  std::set<std::string> skip;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if ((arg == "--only" || arg == "--skip") && i + 1 < argc) {
      if (arg == "--only") {
        only = argv[++i];
      } else {
        skip.insert(argv[++i]);
      }
    } else {
      std::fprintf(stderr, "usage: %s [--only NAME | --skip NAME ...]\n", argv[0]);
      return 2;
    }
  }
  auto selected = [&](const std::string& name) { return (!only || *only == name) && !skip.count(name); };

  // Convergence and diminishing returns share one 100-seed run.
  std::optional<ConvergenceReport> convergence;
  auto shared_convergence = [&]() -> const ConvergenceReport& {
    if (!convergence) convergence = run_convergence();
    return *convergence;
  };

  struct Criterion {
    const char* name;
    std::function<ExperimentResult()> run;
  };
  const std::vector<Criterion> criteria{
      {"advantage_identity", [] { return advantage_identity_experiment(); }},
      {"gradient_check", [] { return gradient_check_experiment(); }},
      {"tabular_reduction", [] { return tabular_reduction_experiment(); }},
      {"convergence", [&] { return convergence_experiment(shared_convergence()); }},
      {"diminishing_returns", [&] { return diminishing_returns_experiment(shared_convergence()); }},
      {"sign_flip", [] { return sign_flip_experiment(); }},
      {"tamer_unlearning", [] { return tamer_unlearning_experiment(); }},
      {"credit_window", [] { return credit_window_experiment(); }},
      {"feature_pipeline", [] { return feature_pipeline_experiment(); }},
      {"soak", [] { return soak_experiment(); }},
      {"determinism", [] { return determinism_experiment(); }},
  };

  bool any = false;
  bool all_passed = true;
  for (const Criterion& c : criteria) {
    if (!selected(c.name)) continue;
    any = true;
    ExperimentResult r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = {c.name, false, std::string("threw: ") + e.what(), 0.0};
    }
    std::printf("%s\n", format_result(r).c_str());
    std::fflush(stdout);
    all_passed = all_passed && r.passed;
  }
  if (!any) {
    std::fprintf(stderr, "no criterion matches the selection\n");
    return 2;
  }
  return all_passed ? 0 : 1;
}
