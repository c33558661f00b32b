#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "coachlab/config.hpp"
#include "coachlab/experiments.hpp"
#include "coachlab/protocol.hpp"
#include "coachlab/session.hpp"

namespace coachlab {

/// Raw client feedback mapped onto the learner's (value, trace) pair.
struct MappedFeedback {
  double value;
  std::string trace_id;
};

/// An explicit known trace keeps the raw value; an exact feedback_map key
/// keeps its trace; otherwise |v| >= strong_threshold becomes +-4 on the
/// long trace and anything else +-1 on the default trace. Zero maps to
/// nothing. Throws ProtocolError for an unknown explicit trace.
std::optional<MappedFeedback> map_client_feedback(const FeedbackMessage& message, const SessionConfig& config);

/// The trace strong slider feedback goes to: the one +4 maps to, else the
/// trace with the slowest decay.
const std::string& long_trace_id(const CoachConfig& config);

struct ServiceScenario {
  enum class Kind { train, scripted, amt } kind = Kind::train;
  DogBehavior behavior = DogBehavior::good;

  /// Parses "dog_grid", "scripted:<kind>" and "amt:<kind>".
  static ServiceScenario parse(std::string_view name);
  std::string name() const;
};

struct CycleReport {
  bool stepped = false;
  /// Messages to broadcast, in order.
  std::vector<std::string> broadcasts;
  std::size_t feedback_events = 0;
};

struct ServiceStats {
  std::uint64_t steps = 0;
  std::uint64_t feedback_received = 0;
  std::uint64_t feedback_applied = 0;
  std::uint64_t discarded_while_paused = 0;
  std::uint64_t bad_messages = 0;
};

/// One live training session, independent of any transport.
///
/// Transport handlers call handle_message() from any thread. Feedback goes
/// into a queue stamped with the server receipt time; pause and resume take
/// effect immediately; reset and configure are posted to a mailbox the loop
/// drains at the start of its next cycle. Only run_cycle() touches learner
/// state, and it must be called from a single thread.
class TrainingSession {
 public:
  using Logger = std::function<void(std::string_view)>;

  TrainingSession(SessionConfig config, std::uint64_t seed = 0);

  /// Returns the direct reply to the sender.
  std::string handle_message(std::string_view text, Timestamp receipt);

  /// Executes the cycle at `boundary`: applies mailbox commands, decides,
  /// feeds the learner every event received at or before the boundary,
  /// moves the agent and collects the broadcasts. Paused sessions take no
  /// step and broadcast nothing.
  CycleReport run_cycle(Timestamp boundary);

  /// The latest state message; safe from any thread.
  std::string snapshot() const;

  SessionMode mode() const { return paused_.load() ? SessionMode::paused : SessionMode::running; }
  /// Id of the next step to be taken; never decreases.
  std::uint64_t next_step() const { return next_step_.load(); }
  ServiceStats stats() const;

  const SessionConfig& config() const { return config_; }
  const Agent& agent() const { return *agent_; }
  const SessionLog& log() const { return log_; }

  /// Time since the session was created, for transports without their own clock.
  Timestamp clock_now() const;
  std::chrono::steady_clock::time_point epoch() const { return epoch_; }

  void set_logger(Logger logger) { logger_ = std::move(logger); }

 private:
  struct Pending {
    double value;
    std::string trace_id;
    Timestamp arrival;
  };
  struct Command {
    enum class Kind { reset, configure } kind;
    std::optional<ServiceScenario> scenario;
    std::optional<LearnerKind> learner;
  };

  void apply_command(const Command& command);
  void rebuild_agent();
  void restart_episode();
  void publish_state();
  void log(std::string_view line) const;

  SessionConfig config_;
  std::uint64_t seed_;
  Environment env_;
  std::unique_ptr<Agent> agent_;
  ServiceScenario scenario_;
  std::optional<TabularPolicy> scripted_;
  std::size_t amt_episodes_ = 0;
  std::mt19937_64 rng_;
  StateId state_;
  std::uint64_t episode_ = 0;
  std::size_t episode_steps_ = 0;
  SessionLog log_;
  std::chrono::steady_clock::time_point epoch_;
  Logger logger_;

  std::atomic<bool> paused_{false};
  std::atomic<std::uint64_t> next_step_{0};

  mutable std::mutex queue_mutex_;
  std::vector<Pending> queue_;
  std::deque<Command> mailbox_;
  ServiceStats stats_;

  mutable std::mutex state_mutex_;
  StateView latest_state_;
};

/// Drives a session at a fixed cadence on the calling thread.
class CycleLoop {
 public:
  using Sink = std::function<void(const std::string&)>;

  CycleLoop(TrainingSession& session, std::chrono::nanoseconds period, Sink sink = {});

  /// Runs until stop() or until `max_cycles` cycles have elapsed (0 = no
  /// limit). A cycle whose work takes longer than the period is an overrun.
  /// A cycle that starts a full period or more after its boundary (the
  /// thread woke late) is a late wake-up. Either way the next boundary is
  /// pushed back to one period after the work ends.
  void run(std::uint64_t max_cycles = 0);
  void stop() { stop_.store(true); }

  std::uint64_t cycles() const { return cycles_.load(); }
  std::uint64_t overruns() const { return overruns_.load(); }
  std::uint64_t late_wakeups() const { return late_wakeups_.load(); }
  /// Longest time spent inside run_cycle plus broadcasting.
  std::chrono::nanoseconds max_work() const { return std::chrono::nanoseconds(max_work_.load()); }

 private:
  TrainingSession& session_;
  std::chrono::nanoseconds period_;
  Sink sink_;
  std::atomic<bool> stop_{false};
  std::atomic<std::uint64_t> cycles_{0};
  std::atomic<std::uint64_t> overruns_{0};
  std::atomic<std::uint64_t> late_wakeups_{0};
  std::atomic<std::int64_t> max_work_{0};
};

/// `cycles` real-time cycles of the tabular dog grid with injected feedback,
/// plus the worst per-cycle compute of the visual-feature learner.
ExperimentResult soak_experiment(std::uint64_t cycles = 10000, std::uint64_t visual_cycles = 300);

}  // namespace coachlab
