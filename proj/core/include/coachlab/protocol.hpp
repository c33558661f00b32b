#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "coachlab/gridworld.hpp"

namespace coachlab {

/// Every message carries `"v": kProtocolVersion`; clients may omit it.
inline constexpr int kProtocolVersion = 1;

/// A client message that does not match the schema.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FeedbackMessage {
  double value = 0.0;
  std::optional<std::string> trace;
  /// Step id the client saw when the gesture was made; informational.
  std::optional<std::uint64_t> seen_step;
};

enum class ControlCommand { pause, resume, reset };

struct ControlMessage {
  ControlCommand cmd;
};

struct ConfigureMessage {
  /// "dog_grid", "scripted:<bad|alright|good>" or "amt:<bad|alright|good>".
  std::optional<std::string> scenario;
  /// "coach" or "tamer".
  std::optional<std::string> learner;
};

struct QueryMessage {};

using ClientMessage = std::variant<FeedbackMessage, ControlMessage, ConfigureMessage, QueryMessage>;

/// Throws ProtocolError on malformed JSON, unknown types or bad fields.
ClientMessage parse_client_message(std::string_view text);

enum class SessionMode { running, paused };
std::string_view to_string(SessionMode mode);
std::string_view to_string(ControlCommand cmd);

struct StateView {
  /// Id of the step that produced this state (0 before the first step).
  std::uint64_t t = 0;
  std::uint64_t episode = 0;
  Cell agent;
  SessionMode mode = SessionMode::running;
  std::string scenario;
  std::string learner;
};

std::string state_message(const StateView& state, const GridConfig& grid);
std::string action_message(std::uint64_t t, std::size_t action);
std::string metric_message(std::uint64_t t, double expected_return);
std::string ack_message(std::string_view of, std::uint64_t t, bool accepted = true);
std::string error_message(std::string_view code, std::string_view detail = {});

}  // namespace coachlab
