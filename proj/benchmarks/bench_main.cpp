#include <benchmark/benchmark.h>

#include <chrono>

#include "coachlab/coach.hpp"
#include "coachlab/gridworld.hpp"
#include "coachlab/training_session.hpp"
#include "coachlab/visual_features.hpp"

using namespace coachlab;

namespace {

void BM_CoachStepTabular(benchmark::State& state) {
  const std::size_t dim = static_cast<std::size_t>(state.range(0));
  CoachLearner learner(ParamPolicy(dim, kGridActions), CoachConfig{});
  std::vector<double> x(dim, 0.0);
  std::size_t i = 0;
  for (auto _ : state) {
    std::fill(x.begin(), x.end(), 0.0);
    x[i % dim] = 1.0;
    learner.record_decision(x, i % kGridActions);
    benchmark::DoNotOptimize(learner.step((i % 7 == 0) ? 1.0 : 0.0, "short"));
    ++i;
  }
}
BENCHMARK(BM_CoachStepTabular)->Arg(25)->Arg(42)->Arg(256);

void BM_ExtractFeatures(benchmark::State& state) {
  const SceneImage img = render_scene({Ball{32, 50, 18}}, {Cylinder{12, 20, 10, 30}});
  for (auto _ : state) benchmark::DoNotOptimize(extract_features(img));
}
BENCHMARK(BM_ExtractFeatures);

void BM_RenderAndExtract(benchmark::State& state) {
  const DogGrid g = build_dog_grid();
  const VisualGridFeatures f(g.world);
  std::vector<double> out(f.dimension());
  StateId s = 0;
  for (auto _ : state) {
    f.features(s, out);
    benchmark::DoNotOptimize(out.data());
    s = (s + 1) % g.mdp.num_states();
  }
}
BENCHMARK(BM_RenderAndExtract);

void BM_EvaluatePolicyDogGrid(benchmark::State& state) {
  const DogGrid g = build_dog_grid();
  const TabularPolicy pi = TabularPolicy(g.mdp.num_states(), kGridActions);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_policy(g.mdp, pi));
}
BENCHMARK(BM_EvaluatePolicyDogGrid)->Unit(benchmark::kMicrosecond);

void BM_ServiceRunCycle(benchmark::State& state) {
  TrainingSession session(SessionConfig{}, 1);
  std::chrono::nanoseconds boundary{0};
  std::size_t i = 0;
  for (auto _ : state) {
    boundary += std::chrono::milliseconds(33);
    if (i++ % 5 == 0) session.handle_message(R"({"type":"feedback","value":1})", boundary - std::chrono::milliseconds(1));
    benchmark::DoNotOptimize(session.run_cycle(boundary));
  }
}
BENCHMARK(BM_ServiceRunCycle);

}  // namespace
BENCHMARK_MAIN();
