#include <gtest/gtest.h>

#include "coachlab/config.hpp"
#include "coachlab/digest.hpp"

using namespace coachlab;

TEST(SessionConfig, EmptyTextGivesDefaults) {
  const SessionConfig c = parse_session_config("");
  EXPECT_EQ(c.scenario, Scenario::dog_grid);
  EXPECT_EQ(c.learner, LearnerKind::coach);
  EXPECT_EQ(c.steps, 5000u);
  EXPECT_EQ(c.eval_every, 50u);
  EXPECT_EQ(c.coach.delay_steps, 6u);
  EXPECT_EQ(c.service.cycle_ms, 33u);
}

TEST(SessionConfig, SectionsCommentsAndQuotes) {
  const SessionConfig c = parse_session_config(R"(
    learner = "tamer"     # comment after a value
    steps = 120
    default_trace = fast
    [trainer]
    kind = reward_exemplar
    delay_steps = 1
    [tamer]
    initial_estimate = 20
    [traces.fast]
    lambda = 0.5
    [feedback_map]
    -1 = fast
    1 = fast
    4 = fast
  )");
  EXPECT_EQ(c.learner, LearnerKind::tamer);
  EXPECT_EQ(c.steps, 120u);
  EXPECT_EQ(c.trainer.kind, TrainerKind::reward_exemplar);
  EXPECT_EQ(c.trainer.delay_steps, 1u);
  EXPECT_EQ(c.tamer.initial_estimate, 20.0);
  EXPECT_EQ(c.coach.traces.size(), 1u);
  EXPECT_EQ(c.coach.traces.at("fast"), 0.5);
}

TEST(SessionConfig, InlineLayout) {
  const SessionConfig c = parse_session_config("grid.layout = \"..G/X../S..\"\n");
  EXPECT_EQ(c.grid.width, 3);
  EXPECT_EQ(c.grid.height, 3);
  EXPECT_EQ(c.grid.start, (Cell{0, 0}));
  EXPECT_EQ(c.grid.goal, (Cell{2, 2}));
}

TEST(SessionConfig, MapFileRelativeToConfig) {
  const SessionConfig c = parse_session_config("map = wide.map\n", COACHLAB_TEST_DATA);
  EXPECT_EQ(c.grid.width, 7);
}

TEST(SessionConfig, Rejections) {
  EXPECT_THROW(parse_session_config("alhpa = 0.5"), ConfigError);
  EXPECT_THROW(parse_session_config("steps = -3"), ConfigError);
  EXPECT_THROW(parse_session_config("steps = ten"), ConfigError);
  EXPECT_THROW(parse_session_config("alpha = 0"), ConfigError);
  EXPECT_THROW(parse_session_config("alpha = 0.1\nalpha = 0.2"), ConfigError);
  EXPECT_THROW(parse_session_config("just some words"), ConfigError);
  EXPECT_THROW(parse_session_config("[unterminated\nx = 1"), ConfigError);
  EXPECT_THROW(parse_session_config("learner = robot"), ConfigError);
  EXPECT_THROW(parse_session_config("traces.short.lambda = 1.0"), ConfigError);
  EXPECT_THROW(parse_session_config("trainer.sparsity = 2"), ConfigError);
  EXPECT_THROW(parse_session_config("grid.gamma = 1.5"), ConfigError);
  EXPECT_THROW(load_session_config("/nonexistent/coachlab.conf"), ConfigError);
}

TEST(SessionConfig, ErrorsNameTheLine) {
  try {
    parse_session_config("steps = 10\n\nbogus = 1\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(SessionConfig, CanonicalTextRoundTrip) {
  SessionConfig c = parse_session_config(R"(
    learner = tamer
    features = visual
    alpha = 0.125
    bias_mode = saturating
    trainer.sparsity = 0.3
    trainer.quantize = human_scale
    session.step_period = 0.1
    grid.layout = "S.../.XX./...G"
    feedback_map.2.5 = long
  )");
  const std::string text = to_config_text(c);
  const SessionConfig back = parse_session_config(text);
  EXPECT_EQ(to_config_text(back), text);
  EXPECT_EQ(config_digest(back), config_digest(c));
  EXPECT_EQ(back.coach.feedback_map.at(2.5), "long");
  EXPECT_EQ(back.grid.penalty_cells.size(), 2u);
}

TEST(SessionConfig, DigestTracksContent) {
  const SessionConfig a = parse_session_config("steps = 10");
  const SessionConfig b = parse_session_config("steps = 11");
  EXPECT_EQ(config_digest(a), config_digest(parse_session_config("# same\nsteps=10\n")));
  EXPECT_NE(config_digest(a), config_digest(b));
}

TEST(Digest, KnownSha256) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Digest, ValuesHashDistinguishesBitPatterns) {
  const std::vector<double> a{0.0, 1.0}, b{-0.0, 1.0};
  EXPECT_EQ(values_hash(a).size(), 16u);
  EXPECT_NE(values_hash(a), values_hash(b));
  EXPECT_EQ(values_hash(a), values_hash(std::vector<double>{0.0, 1.0}));
}
