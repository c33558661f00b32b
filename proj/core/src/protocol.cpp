#include "coachlab/protocol.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace coachlab {

using nlohmann::json;

namespace {

json cell_json(Cell c) { return json{{"x", c.x}, {"y", c.y}}; }

json envelope(std::string_view type) { return json{{"type", type}, {"v", kProtocolVersion}}; }

const json& require(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw ProtocolError(std::string("missing field '") + key + "'");
  return *it;
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ProtocolError(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace

ClientMessage parse_client_message(std::string_view text) {
  const json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ProtocolError("message is not valid JSON");
  if (!j.is_object()) throw ProtocolError("message must be a JSON object");
  if (const auto v = j.find("v"); v != j.end() && !(v->is_number_integer() && v->get<int>() == kProtocolVersion)) {
    throw ProtocolError("unsupported protocol version");
  }
  const json& type = require(j, "type");
  if (!type.is_string()) throw ProtocolError("field 'type' must be a string");
  const std::string kind = type.get<std::string>();

  if (kind == "feedback") {
    const json& value = require(j, "value");
    if (!value.is_number()) throw ProtocolError("feedback value must be a number");
    FeedbackMessage m;
    m.value = value.get<double>();
    if (!std::isfinite(m.value)) throw ProtocolError("feedback value must be finite");
    m.trace = optional_string(j, "trace");
    if (const auto t = j.find("t"); t != j.end() && !t->is_null()) {
      if (!t->is_number_unsigned()) throw ProtocolError("field 't' must be a non-negative integer");
      m.seen_step = t->get<std::uint64_t>();
    }
    return m;
  }
  if (kind == "control") {
    const json& cmd = require(j, "cmd");
    if (cmd == "pause") return ControlMessage{ControlCommand::pause};
    if (cmd == "resume") return ControlMessage{ControlCommand::resume};
    if (cmd == "reset") return ControlMessage{ControlCommand::reset};
    throw ProtocolError("unknown control command");
  }
  if (kind == "configure") {
    ConfigureMessage m{optional_string(j, "scenario"), optional_string(j, "learner")};
    if (!m.scenario && !m.learner) throw ProtocolError("configure needs a scenario or a learner");
    return m;
  }
  if (kind == "query") return QueryMessage{};
  throw ProtocolError("unknown message type '" + kind + "'");
}

std::string_view to_string(SessionMode mode) { return mode == SessionMode::running ? "running" : "paused"; }

std::string_view to_string(ControlCommand cmd) {
  switch (cmd) {
    case ControlCommand::pause:
      return "pause";
    case ControlCommand::resume:
      return "resume";
    case ControlCommand::reset:
      return "reset";
  }
  return "?";
}

std::string state_message(const StateView& state, const GridConfig& grid) {
  json penalty = json::array();
  for (const Cell& c : grid.penalty_cells) penalty.push_back(cell_json(c));
  json j = envelope("state");
  j["t"] = state.t;
  j["episode"] = state.episode;
  j["agent"] = cell_json(state.agent);
  j["grid"] = json{{"width", grid.width},
                   {"height", grid.height},
                   {"start", cell_json(grid.start)},
                   {"goal", cell_json(grid.goal)},
                   {"penalty", std::move(penalty)}};
  j["mode"] = to_string(state.mode);
  j["scenario"] = state.scenario;
  j["learner"] = state.learner;
  return j.dump();
}

std::string action_message(std::uint64_t t, std::size_t action) {
  json j = envelope("action");
  j["t"] = t;
  j["action"] = action;
  if (action < kGridActions) j["name"] = to_string(static_cast<GridAction>(action));
  return j.dump();
}

std::string metric_message(std::uint64_t t, double expected_return) {
  json j = envelope("metric");
  j["t"] = t;
  j["return"] = expected_return;
  return j.dump();
}

std::string ack_message(std::string_view of, std::uint64_t t, bool accepted) {
  json j = envelope("ack");
  j["of"] = of;
  j["t"] = t;
  j["accepted"] = accepted;
  return j.dump();
}

std::string error_message(std::string_view code, std::string_view detail) {
  json j = envelope("error");
  j["code"] = code;
  if (!detail.empty()) j["detail"] = detail;
  return j.dump();
}

}  // namespace coachlab
