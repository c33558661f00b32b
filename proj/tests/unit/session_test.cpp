#include <gtest/gtest.h>

#include "coachlab/experiments.hpp"
#include "coachlab/session.hpp"

using namespace coachlab;

namespace {

SessionConfig tamer_dog() {
  return parse_session_config(R"(
    learner = tamer
    steps = 3000
    session.step_period = 0.5
    trainer.kind = reward_exemplar
    trainer.delay_steps = 1
    tamer.initial_estimate = 20
  )");
}

}  // namespace

TEST(Session, ZeroStepsGivesHeaderOnly) {
  SessionConfig c;
  c.steps = 0;
  const SessionLog log = run_session(c, 1);
  EXPECT_TRUE(log.records().empty());
  EXPECT_EQ(log.header().config_digest, config_digest(c));
  EXPECT_EQ(log.header().seed, 1u);
  EXPECT_FALSE(log.header().aborted);
}

TEST(Session, SameSeedSameLog) {
  SessionConfig c;
  c.steps = 400;
  const SessionLog a = run_session(c, 9);
  const SessionLog b = run_session(c, 9);
  EXPECT_EQ(a.digest(), b.digest());
  EXPECT_NE(run_session(c, 10).digest(), a.digest());
}

TEST(Session, SilentTrainerLeavesPolicyUntouched) {
  SessionConfig c;
  c.steps = 300;
  c.trainer.kind = TrainerKind::none;
  const SessionResult r = run_session_detailed(c, 3);
  for (double w : r.parameters) EXPECT_EQ(w, 0.0);
  for (const StepRecord& rec : r.log.records()) EXPECT_FALSE(rec.feedback.has_value());
}

TEST(Session, LogStructure) {
  SessionConfig c;
  c.steps = 250;
  const SessionResult r = run_session_detailed(c, 5);
  ASSERT_EQ(r.log.records().size(), 250u);
  for (std::size_t i = 0; i < 250; ++i) {
    const StepRecord& rec = r.log.records()[i];
    EXPECT_EQ(rec.t, i);
    EXPECT_EQ(rec.eval_return.has_value(), (i + 1) % 50 == 0);
    EXPECT_EQ(rec.policy_hash.size(), 16u);
  }
  EXPECT_EQ(r.feedback.size(), 250u);
  EXPECT_FALSE(r.visited.empty());
}

TEST(Session, EpisodesRestartAtGoalOrCap) {
  SessionConfig c;
  c.steps = 400;
  c.max_episode_steps = 20;
  c.trainer.kind = TrainerKind::none;
  const SessionLog log = run_session(c, 2);
  std::size_t run = 0, last_episode = 0;
  for (const StepRecord& rec : log.records()) {
    if (rec.episode != last_episode) {
      EXPECT_EQ(rec.episode, last_episode + 1);
      EXPECT_EQ(rec.state, GridWorld(c.grid).start_state());
      last_episode = rec.episode;
      run = 0;
    }
    EXPECT_LT(run++, 20u);
  }
  EXPECT_GE(last_episode, 19u);
}

TEST(Session, TamerWithRewardExemplarReachesGoalSafely) {
  const SessionConfig c = tamer_dog();
  const SessionResult r = run_session_detailed(c, 4);
  const GridWorld world(c.grid);
  const auto path = rollout_path(world, r.greedy, c.grid.start, 100);
  ASSERT_TRUE(world.is_goal(path.back()));
  for (const Cell& cell : path) EXPECT_FALSE(world.is_penalty(cell));
}

TEST(Session, CoachAdvantageImprovesReturn) {
  // Smaller step size than the canonical run; the greedy return should
  // climb well above the uniform starting point.
  SessionConfig c = convergence_config();
  c.coach.alpha = 0.05;
  c.steps = 5000;
  const SessionResult r = run_session_detailed(c, 1);
  const Environment env = make_environment(c);
  const double optimal = value_iteration(env.mdp).values[env.start];
  const double final_return = *r.log.records().back().eval_return;
  EXPECT_GT(final_return, 0.0);
  EXPECT_LE(final_return, optimal + 1e-9);
}

TEST(Session, VisualFeaturesRun) {
  SessionConfig c;
  c.features = FeatureKind::visual;
  c.steps = 60;
  const SessionLog log = run_session(c, 1);
  EXPECT_EQ(log.records().size(), 60u);
  EXPECT_EQ(log.digest(), run_session(c, 1).digest());
}

TEST(Session, PolicyShapingScenario) {
  SessionConfig c;
  c.scenario = Scenario::policy_shaping;
  c.steps = 200;
  c.eval_every = 10;
  c.coach.delay_steps = 0;
  const SessionLog log = run_session(c, 1);
  for (const StepRecord& rec : log.records()) EXPECT_EQ(rec.state, 0u);
  c.features = FeatureKind::visual;
  EXPECT_THROW(run_session(c, 1), ConfigError);
}

TEST(Session, FaultMarksLogAborted) {
  // Rewards at the edge of the double range overflow the oracle's policy
  // evaluation inside the loop.
  SessionConfig c = parse_session_config(R"(
    learner = tamer
    steps = 50
    trainer.kind = qvalue
    grid.goal_reward = 1e308
    grid.penalty_reward = -1e308
  )");
  const SessionLog log = run_session(c, 1);
  EXPECT_TRUE(log.header().aborted);
  EXPECT_NE(log.header().abort_reason.find("did not converge"), std::string::npos);
  EXPECT_LT(log.records().size(), 50u);
  EXPECT_EQ(from_jsonl(to_jsonl(log)), log);
}

TEST(Session, StepTime) {
  EXPECT_EQ(step_time(0, 0.033).count(), 0);
  EXPECT_EQ(step_time(3, 0.033), std::chrono::milliseconds(99));
}
