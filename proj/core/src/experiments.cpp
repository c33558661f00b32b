#include "coachlab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <random>
#include <set>

#include "coachlab/coach.hpp"
#include "coachlab/mdp.hpp"
#include "coachlab/policy.hpp"
#include "coachlab/session.hpp"
#include "coachlab/tamer.hpp"
#include "coachlab/trainers.hpp"
#include "coachlab/visual_features.hpp"

namespace coachlab {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string printf_string(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(uniform01(rng) * double(hi - lo + 1));
}

double uniform_real(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

Mdp random_mdp(std::mt19937_64& rng) {
  const std::size_t n = uniform_index(rng, 2, 50);
  const std::size_t m = uniform_index(rng, 1, 5);
  const double gamma = uniform_real(rng, 0.5, 0.99);
  Mdp::Builder b(n, m, gamma);
  const bool has_terminal = uniform01(rng) < 0.5;
  for (StateId s = 0; s < n; ++s) {
    if (has_terminal && s == n - 1) {
      b.set_terminal(s);
      continue;
    }
    for (ActionId a = 0; a < m; ++a) {
      const std::size_t k = uniform_index(rng, 1, 3);
      std::vector<double> w(k);
      double total = 0.0;
      for (double& v : w) total += v = uniform_real(rng, 0.1, 1.0);
      double assigned = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        const double p = i + 1 == k ? 1.0 - assigned : w[i] / total;
        assigned += p;
        b.add_outcome(s, a, uniform_index(rng, 0, n - 1), p, uniform_real(rng, -5.0, 5.0));
      }
    }
  }
  return b.build();
}

TabularPolicy random_policy(std::mt19937_64& rng, std::size_t n, std::size_t m) {
  std::vector<double> probs(n * m);
  for (StateId s = 0; s < n; ++s) {
    double total = 0.0;
    for (ActionId a = 0; a < m; ++a) total += probs[s * m + a] = uniform_real(rng, 0.01, 1.0);
    for (ActionId a = 0; a < m; ++a) probs[s * m + a] /= total;
  }
  return TabularPolicy(n, m, std::move(probs));
}

CoachConfig single_trace_config(double alpha, UpdateMode mode) {
  CoachConfig c;
  c.alpha = alpha;
  c.delay_steps = 0;
  c.traces = {{"only", 0.0}};
  c.feedback_map = {};
  c.default_trace = "only";
  c.update_mode = mode;
  return c;
}

ExperimentResult finish(std::string name, bool passed, std::string detail, Clock::time_point start) {
  return {std::move(name), passed, std::move(detail), seconds_since(start)};
}

}  // namespace

ExperimentResult advantage_identity_experiment(std::size_t num_mdps, std::uint64_t seed) {
  const auto start = Clock::now();
  std::mt19937_64 rng(seed);
  double worst_sum = 0.0;
  double worst_td = 0.0;
  for (std::size_t i = 0; i < num_mdps; ++i) {
    const Mdp mdp = random_mdp(rng);
    const TabularPolicy pi = random_policy(rng, mdp.num_states(), mdp.num_actions());
    const ValueTable v = evaluate_policy(mdp, pi);
    const QTable q = action_values(mdp, v);
    const ATable adv = advantage(q, pi);
    for (StateId s = 0; s < mdp.num_states(); ++s) {
      double weighted = 0.0;
      for (ActionId a = 0; a < mdp.num_actions(); ++a) {
        weighted += pi(s, a) * adv(s, a);
        double expected_td = 0.0;
        for (const Outcome& o : mdp.outcomes(s, a)) {
          expected_td += o.probability * td_error(v, o.reward, s, o.next, mdp.gamma());
        }
        worst_td = std::max(worst_td, std::abs(expected_td - adv(s, a)));
      }
      worst_sum = std::max(worst_sum, std::abs(weighted));
    }
  }
  const double secs = seconds_since(start);
  const bool ok = worst_sum <= 1e-9 && worst_td <= 1e-9 && secs < 10.0;
  return {"advantage_identity", ok,
          printf_string("%zu MDPs, max |sum pi A| = %.3g, max |E[td] - A| = %.3g", num_mdps, worst_sum, worst_td), secs};
}

ExperimentResult gradient_check_experiment(std::size_t num_triples, std::uint64_t seed) {
  const auto start = Clock::now();
  std::mt19937_64 rng(seed);
  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t i = 0; i < num_triples; ++i) {
    const std::size_t dim = uniform_index(rng, 1, 6);
    const std::size_t actions = uniform_index(rng, 2, 5);
    const BiasMode bias = uniform01(rng) < 0.5 ? BiasMode::none : BiasMode::saturating;
    ParamPolicy policy(dim, actions, bias);
    std::vector<double> params(policy.num_parameters());
    for (double& p : params) p = uniform_real(rng, -1.5, 1.5);
    policy.set_parameters(params);
    std::vector<double> x(dim);
    for (double& v : x) v = uniform_real(rng, -1.0, 1.0);
    const ActionId a = uniform_index(rng, 0, actions - 1);

    const std::vector<double> g = policy.score(x, a);
    double diff2 = 0.0;
    double norm2 = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto log_pi = [&](double delta) {
        std::vector<double> p = params;
        p[k] += delta;
        ParamPolicy moved = policy;
        moved.set_parameters(p);
        return std::log(moved.action_distribution(x)[a]);
      };
      const double fd = (log_pi(h) - log_pi(-h)) / (2.0 * h);
      diff2 += (g[k] - fd) * (g[k] - fd);
      norm2 += fd * fd;
    }
    const double rel = std::sqrt(diff2) / std::max(std::sqrt(norm2), 1e-8);
    worst = std::max(worst, rel);
  }
  const double secs = seconds_since(start);
  return {"gradient_check", worst < 1e-5 && secs < 5.0,
          printf_string("%zu triples, max relative error %.3g", num_triples, worst), secs};
}

ExperimentResult tabular_reduction_experiment(std::size_t num_steps, std::uint64_t seed) {
  const auto start = Clock::now();
  std::mt19937_64 rng(seed);
  std::size_t mismatches = 0;
  for (UpdateMode mode : {UpdateMode::likelihood_ratio, UpdateMode::preference_direct}) {
    const std::size_t dim = 5;
    const std::size_t actions = 4;
    const double alpha = 0.3;
    ParamPolicy reference(dim, actions, BiasMode::saturating);
    CoachLearner learner(reference, single_trace_config(alpha, mode));
    for (std::size_t t = 0; t < num_steps; ++t) {
      std::vector<double> x(dim);
      for (double& v : x) v = uniform_real(rng, -1.0, 1.0);
      const ActionId a = uniform_index(rng, 0, actions - 1);
      const double f = uniform01(rng) < 0.2 ? 0.0 : uniform_real(rng, -4.0, 4.0);
      learner.record_decision(x, a);
      learner.step(f, "only");
      reference.apply_feedback_update(x, a, f, alpha, mode);
      const auto p = learner.policy().parameters();
      const auto q = reference.parameters();
      if (std::memcmp(p.data(), q.data(), p.size_bytes()) != 0) ++mismatches;
    }
  }
  return finish("tabular_reduction", mismatches == 0,
                printf_string("%zu steps per update mode, %zu parameter mismatches", num_steps, mismatches), start);
}

SessionConfig convergence_config() {
  SessionConfig c;
  c.scenario = Scenario::dog_grid;
  c.learner = LearnerKind::coach;
  c.features = FeatureKind::tabular;
  c.steps = 5000;
  c.coach = single_trace_config(0.5, UpdateMode::preference_direct);
  c.trainer.kind = TrainerKind::advantage;
  return c;
}

ConvergenceReport run_convergence(std::size_t seeds, std::size_t window) {
  const auto start = Clock::now();
  const SessionConfig config = convergence_config();
  const Environment env = make_environment(config);
  const OptimalSolution optimal = value_iteration(env.mdp);
  const double best = optimal.values[env.start];

  ConvergenceReport report;
  report.seeds = seeds;
  const std::size_t windows = (config.steps + window - 1) / window;
  std::vector<double> sum(windows, 0.0);
  std::vector<double> count(windows, 0.0);
  for (std::size_t seed = 0; seed < seeds; ++seed) {
    const SessionResult r = run_session_detailed(config, seed);
    bool policy_ok = !r.log.header().aborted;
    for (StateId s : r.visited) {
      if (env.mdp.is_terminal(s)) continue;
      const auto set = optimal_action_set(optimal.q.row(s));
      const auto row = r.greedy.row(s);
      const auto greedy = static_cast<ActionId>(std::max_element(row.begin(), row.end()) - row.begin());
      if (std::find(set.begin(), set.end(), greedy) == set.end()) policy_ok = false;
    }
    const double ret = evaluate_return(env, r.greedy);
    const bool return_ok = std::abs(ret - best) <= 0.01 * std::abs(best);
    report.policy_ok += policy_ok;
    report.return_ok += return_ok;
    report.passed += policy_ok && return_ok;
    for (std::size_t t = 0; t < r.feedback.size(); ++t) {
      if (!r.adopted_optimal[t]) continue;
      sum[t / window] += std::abs(r.feedback[t]);
      count[t / window] += 1.0;
    }
  }
  for (std::size_t w = 0; w < windows; ++w) report.window_feedback.push_back(count[w] > 0 ? sum[w] / count[w] : 0.0);
  report.seconds = seconds_since(start);
  return report;
}

ExperimentResult convergence_experiment(const ConvergenceReport& report) {
  const bool ok = report.seeds >= 100 && report.passed >= 95 * report.seeds / 100 && report.seconds < 60.0;
  return {"convergence", ok,
          printf_string("%zu/%zu seeds optimal (policy on visited states %zu, return within 1%% %zu), %.1f s",
                        report.passed, report.seeds, report.policy_ok, report.return_ok, report.seconds),
          report.seconds};
}

ExperimentResult diminishing_returns_experiment(const ConvergenceReport& report) {
  const auto& w = report.window_feedback;
  std::size_t increases = 0;
  for (std::size_t i = 1; i < w.size(); ++i) increases += w[i] > w[i - 1];
  const double first = w.empty() ? 0.0 : w.front();
  const double last = w.empty() ? 0.0 : w.back();
  const bool ok = !w.empty() && increases == 0 && last < 0.05 * first;
  return {"diminishing_returns", ok,
          printf_string("%zu windows, %zu increases, first %.4g, final %.4g (ratio %.4g)", w.size(), increases, first,
                        last, first > 0 ? last / first : 0.0),
          0.0};
}

ExperimentResult sign_flip_experiment() {
  const auto start = Clock::now();
  const std::array<double, 3> rewards{1.0, 2.0, 3.0};
  const Mdp mdp = build_policy_shaping_scenario(rewards);
  const TabularFeatures features(mdp.num_states());
  TrainerConfig tc;
  tc.kind = TrainerKind::advantage;
  OracleTrainer trainer(mdp, tc, 0);

  ParamPolicy initial(features.dimension(), 3);
  std::vector<double> params(initial.num_parameters(), 0.0);
  params[0] = 3.0;  // w_{a1} on the decision state
  initial.set_parameters(params);
  CoachLearner learner(initial, single_trace_config(0.1, UpdateMode::preference_direct));

  auto closed_form = [&](const TabularPolicy& pi) {
    double v = 0.0;
    for (ActionId a = 0; a < 3; ++a) v += pi(0, a) * rewards[a];
    return rewards[1] - v;
  };

  const TabularPolicy start_pi = tabulate(learner.policy(), features, mdp.num_states());
  const double f_start = trainer.raw_feedback(start_pi, 0, 1);
  bool ok = start_pi(0, 0) > 0.9 && f_start > 0.0 && std::abs(f_start - closed_form(start_pi)) <= 1e-12;

  std::mt19937_64 rng(7);
  const std::vector<double> x = features(0);
  std::size_t steps = 0;
  std::size_t sign_mismatches = 0;
  TabularPolicy pi = start_pi;
  while (pi(0, 2) <= 0.9 && steps < 100000) {
    const auto probs = learner.policy().action_distribution(x);
    const double u = uniform01(rng);
    const ActionId a = u < probs[0] ? 0 : (u < probs[0] + probs[1] ? 1 : 2);
    const double f2 = trainer.raw_feedback(pi, 0, 1);
    const double expected = closed_form(pi);
    if (std::abs(expected) > 1e-9 && (f2 > 0.0) != (expected > 0.0)) ++sign_mismatches;
    learner.record_decision(x, a);
    learner.step(trainer.raw_feedback(pi, 0, a), "only");
    learner.begin_episode();
    pi = tabulate(learner.policy(), features, mdp.num_states());
    ++steps;
  }
  const double f_end = trainer.raw_feedback(pi, 0, 1);
  ok = ok && pi(0, 2) > 0.9 && f_end < 0.0 && std::abs(f_end - closed_form(pi)) <= 1e-12 && sign_mismatches == 0;
  return finish("sign_flip", ok,
                printf_string("A(a2) = %+.4f at pi(a1) = %.3f; A(a2) = %+.4f at pi(a3) = %.3f after %zu steps",
                              f_start, start_pi(0, 0), f_end, pi(0, 2), steps),
                start);
}

ExperimentResult tamer_unlearning_experiment() {
  const auto start = Clock::now();
  constexpr ActionId kStay = 0;
  constexpr ActionId kForward = 1;
  const std::vector<double> ball{1.0, 0.0};
  const std::vector<double> cylinder{0.0, 1.0};
  const std::vector<double> both{1.0, 1.0};
  const double alpha = 0.5;
  const auto half_second = std::chrono::milliseconds(500);
  const auto spacing = std::chrono::seconds(2);

  // Feedback arrives half a second after its step, inside the credit window
  // of that step only.
  struct Lesson {
    const std::vector<double>* x;
    ActionId action;
    double value;
    std::size_t repeats;
  };
  const std::vector<Lesson> lessons{{&ball, kStay, 10.0, 64}, {&cylinder, kForward, 4.0, 64}};

  TamerLearner tamer(RewardModel(2, 2, alpha), CreditWindow{});
  Timestamp now{0};
  for (const Lesson& l : lessons) {
    for (std::size_t i = 0; i < l.repeats; ++i) {
      tamer.record_decision(now, *l.x, l.action);
      tamer.give_feedback(now + half_second, l.value);
      now += spacing;
    }
  }
  const RewardModel& model = tamer.model();
  const bool trained = model.estimate(ball, kStay) == 10.0 && model.estimate(cylinder, kForward) == 4.0;
  const ActionId before = tamer.act(both);
  tamer.record_decision(now, both, kStay);
  const std::size_t credited = tamer.give_feedback(now + half_second, 1.0);
  const double stay_both = model.estimate(both, kStay);
  const double forward_both = model.estimate(both, kForward);
  const ActionId after = tamer.act(both);
  const bool tamer_ok = trained && before == kStay && credited == 1 && stay_both == 1.0 && forward_both == 4.0 &&
                        model.weights(kStay)[0] == 5.5 && model.weights(kStay)[1] == -4.5 && after == kForward;

  // Same lessons and the same +1 under COACH with the plain update.
  CoachLearner coach(ParamPolicy(2, 2), single_trace_config(alpha, UpdateMode::likelihood_ratio));
  for (const Lesson& l : lessons) {
    for (std::size_t i = 0; i < l.repeats; ++i) {
      coach.record_decision(*l.x, l.action);
      coach.step(l.value, "only");
    }
  }
  const double stay_before = coach.policy().action_distribution(both)[kStay];
  coach.record_decision(both, kStay);
  coach.step(1.0, "only");
  const double stay_after = coach.policy().action_distribution(both)[kStay];
  const bool coach_ok = stay_after > stay_before;

  const double secs = seconds_since(start);
  return {"tamer_unlearning", tamer_ok && coach_ok && secs < 1.0,
          printf_string("TAMER: H(stay|both) %.4g vs H(fwd|both) %.4g, action %s -> %s; COACH pi(stay|both) %.6f -> %.6f",
                        stay_both, forward_both, before == kStay ? "stay" : "forward",
                        after == kStay ? "stay" : "forward", stay_before, stay_after),
          secs};
}

ExperimentResult credit_window_experiment() {
  const auto start = Clock::now();
  const CreditWindow window{};
  const std::size_t n = 40;
  std::vector<Timestamp> times(n + 1);
  for (std::size_t k = 0; k <= n; ++k) times[k] = window.step_period * static_cast<std::int64_t>(k);
  const Timestamp feedback = times[n];
  const auto credits = credit_weights(feedback, times, window);
  std::vector<std::size_t> offsets;
  bool weights_ok = true;
  for (const Credit& c : credits) {
    offsets.push_back(n - c.index);
    weights_ok = weights_ok && c.weight == 1.0 / 18.0;
  }
  std::sort(offsets.begin(), offsets.end());
  std::vector<std::size_t> expected;
  for (std::size_t k = 7; k <= 24; ++k) expected.push_back(k);
  const bool ok = offsets == expected && weights_ok;
  return finish("credit_window", ok,
                printf_string("%zu eligible offsets, k = %zu..%zu, weight %s 1/18", offsets.size(),
                              offsets.empty() ? 0 : offsets.front(), offsets.empty() ? 0 : offsets.back(),
                              weights_ok ? "==" : "!="),
                start);
}

ExperimentResult feature_pipeline_experiment() {
  const auto start = Clock::now();
  const FeatureConfig config;
  bool ok = config.feature_count() == 42;

  std::size_t scenes = 0;
  bool in_range = true;
  auto check = [&](const SceneImage& img) {
    const auto f = extract_features(img, config);
    ok = ok && f.size() == 42;
    for (double v : f) in_range = in_range && v >= 0.0 && v <= 1.0;
    ++scenes;
  };
  const GridWorld world(GridConfig{});
  for (int y = 0; y < world.height(); ++y) {
    for (int x = 0; x < world.width(); ++x) check(render_grid_view(world, {x, y}, config));
  }
  std::mt19937_64 rng(11);
  for (int i = 0; i < 40; ++i) {
    check(render_scene({{uniform_real(rng, 0, 64), uniform_real(rng, 0, 64), uniform_real(rng, 1, 20)}},
                       {{uniform_real(rng, 0, 64), uniform_real(rng, 0, 48), uniform_real(rng, 2, 16),
                         uniform_real(rng, 4, 30)}},
                       config));
  }

  bool fixed_points = true;
  for (std::size_t i = 0; i < 3; ++i) {
    Channel grid(3, 1);
    grid.values = {0.0, config.phi[i], 2.0 * config.phi[i]};
    const auto units = threshold_units(grid, config.phi);
    fixed_points = fixed_points && units[i].values[0] == 0.0 && units[i].values[1] == 1.0 && units[i].values[2] == 1.0;
  }
  const auto pooled = max_pool(Channel(8, 8), config.max_pool_rows, config.max_pool_cols);
  const bool shape = pooled.size() == 7;

  const double secs = seconds_since(start);
  ok = ok && in_range && fixed_points && shape && secs < 1.0;
  return {"feature_pipeline", ok,
          printf_string("length %zu, %zu scenes in [0,1]: %s, threshold fixed points: %s, 8x8 max-pool -> %zu",
                        config.feature_count(), scenes, in_range ? "yes" : "no", fixed_points ? "yes" : "no",
                        pooled.size()),
          secs};
}

ExperimentResult determinism_experiment() {
  const auto start = Clock::now();
  std::vector<SessionConfig> configs;
  SessionConfig coach = convergence_config();
  coach.steps = 1000;
  configs.push_back(coach);

  SessionConfig defaults;
  defaults.steps = 1000;
  defaults.trainer.quantize = Quantizer::human_scale;
  defaults.trainer.sparsity = 0.5;
  defaults.trainer.delay_steps = 6;
  configs.push_back(defaults);

  SessionConfig tamer;
  tamer.learner = LearnerKind::tamer;
  tamer.trainer.kind = TrainerKind::reward_exemplar;
  tamer.trainer.delay_steps = 1;
  tamer.step_period = 0.5;
  tamer.tamer.initial_estimate = 20.0;
  tamer.steps = 1000;
  configs.push_back(tamer);

  SessionConfig visual;
  visual.features = FeatureKind::visual;
  visual.steps = 100;
  visual.eval_every = 25;
  configs.push_back(visual);

  bool ok = true;
  std::size_t runs = 0;
  for (const SessionConfig& c : configs) {
    for (std::uint64_t seed : {0ULL, 42ULL}) {
      const SessionLog a = run_session(c, seed);
      const SessionLog b = run_session(c, seed);
      ok = ok && !a.header().aborted && a.digest() == b.digest() && to_csv(a) == to_csv(b);
      runs += 2;
    }
  }
  const bool seeds_differ = run_session(coach, 1).digest() != run_session(coach, 2).digest();
  return finish("determinism", ok && seeds_differ,
                printf_string("%zu runs over %zu configs, repeated digests %s, distinct seeds %s", runs,
                              configs.size(), ok ? "identical" : "DIFFER", seeds_differ ? "differ" : "collide"),
                start);
}

std::vector<NamedExperiment> core_experiments() {
  return {
      {"advantage_identity", [] { return std::vector{advantage_identity_experiment()}; }},
      {"gradient_check", [] { return std::vector{gradient_check_experiment()}; }},
      {"tabular_reduction", [] { return std::vector{tabular_reduction_experiment()}; }},
      {"convergence",
       [] {
         const ConvergenceReport report = run_convergence();
         return std::vector{convergence_experiment(report), diminishing_returns_experiment(report)};
       }},
      {"sign_flip", [] { return std::vector{sign_flip_experiment()}; }},
      {"tamer_unlearning", [] { return std::vector{tamer_unlearning_experiment()}; }},
      {"credit_window", [] { return std::vector{credit_window_experiment()}; }},
      {"feature_pipeline", [] { return std::vector{feature_pipeline_experiment()}; }},
      {"determinism", [] { return std::vector{determinism_experiment()}; }},
  };
}

std::string format_result(const ExperimentResult& result) {
  return printf_string("%s %-20s %s (%.2f s)", result.passed ? "PASS" : "FAIL", result.name.c_str(),
                       result.detail.c_str(), result.seconds);
}

}  // namespace coachlab
