#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "coachlab/protocol.hpp"

using namespace coachlab;
using nlohmann::json;

TEST(ParseClientMessage, Feedback) {
  const auto m = std::get<FeedbackMessage>(parse_client_message(R"({"type":"feedback","value":1})"));
  EXPECT_EQ(m.value, 1.0);
  EXPECT_FALSE(m.trace);
  const auto tagged =
      std::get<FeedbackMessage>(parse_client_message(R"({"v":1,"t":12,"trace":"long","value":4,"type":"feedback"})"));
  EXPECT_EQ(tagged.value, 4.0);
  EXPECT_EQ(*tagged.trace, "long");
  EXPECT_EQ(*tagged.seen_step, 12u);
}

TEST(ParseClientMessage, ControlConfigureQuery) {
  EXPECT_EQ(std::get<ControlMessage>(parse_client_message(R"({"type":"control","cmd":"pause"})")).cmd,
            ControlCommand::pause);
  EXPECT_EQ(std::get<ControlMessage>(parse_client_message(R"({"type":"control","cmd":"reset"})")).cmd,
            ControlCommand::reset);
  const auto cfg =
      std::get<ConfigureMessage>(parse_client_message(R"({"type":"configure","scenario":"scripted:bad"})"));
  EXPECT_EQ(*cfg.scenario, "scripted:bad");
  EXPECT_FALSE(cfg.learner);
  EXPECT_TRUE(std::holds_alternative<QueryMessage>(parse_client_message(R"({"type":"query"})")));
}

TEST(ParseClientMessage, Malformed) {
  for (const char* bad : {
           R"({"type":"feedback","value":"high"})",
           R"({"type":"feedback"})",
           R"({"type":"control","cmd":"jump"})",
           R"({"type":"dance"})",
           R"({"value":1})",
           R"([1,2,3])",
           R"({"type":"feedback","value":1,"v":2})",
           R"({"type":"feedback","value":1,"trace":7})",
           R"({"type":"configure","learner":3})",
           "not json at all",
           "",
       }) {
    EXPECT_THROW(parse_client_message(bad), ProtocolError) << bad;
  }
}

TEST(ServerMessages, CarryVersionAndFields) {
  StateView view;
  view.t = 7;
  view.episode = 2;
  view.agent = {3, 1};
  view.mode = SessionMode::paused;
  const json state = json::parse(state_message(view, GridConfig{}));
  EXPECT_EQ(state["v"], kProtocolVersion);
  EXPECT_EQ(state["type"], "state");
  EXPECT_EQ(state["t"], 7);
  EXPECT_EQ(state["agent"]["x"], 3);
  EXPECT_EQ(state["agent"]["y"], 1);
  EXPECT_EQ(state["mode"], "paused");
  EXPECT_EQ(state["grid"]["penalty"].size(), 3u);
  EXPECT_EQ(state["grid"]["goal"]["y"], 4);

  const json action = json::parse(action_message(9, 0));
  EXPECT_EQ(action["action"], 0);
  EXPECT_EQ(action["name"], "up");
  const json metric = json::parse(metric_message(49, 4.5));
  EXPECT_EQ(metric["return"], 4.5);
  const json error = json::parse(error_message("bad_message", "oops"));
  EXPECT_EQ(error["type"], "error");
  EXPECT_EQ(error["code"], "bad_message");
  const json ack = json::parse(ack_message("feedback", 3));
  EXPECT_EQ(ack["of"], "feedback");
  EXPECT_EQ(ack["t"], 3);
  EXPECT_EQ(ack["accepted"], true);
}
