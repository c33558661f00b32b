#pragma once

#include <chrono>
#include <cstddef>
#include <deque>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "coachlab/policy.hpp"

namespace coachlab {

/// Monotonic time since session start.
using Timestamp = std::chrono::nanoseconds;

enum class FeedbackSource { human, oracle };

struct FeedbackEvent {
  double value = 0.0;
  std::string trace_id;
  Timestamp arrival{0};
  FeedbackSource source = FeedbackSource::human;
};

struct CoachConfig {
  double alpha = 0.05;
  std::size_t delay_steps = 6;
  /// trace id -> decay rate, each in [0, 1)
  std::map<std::string, double> traces{{"short", 0.95}, {"long", 0.9999}};
  /// exact feedback value -> trace id; unmapped values use default_trace
  std::map<double, std::string> feedback_map{{-1.0, "short"}, {1.0, "short"}, {4.0, "long"}};
  std::string default_trace = "short";
  UpdateMode update_mode = UpdateMode::preference_direct;
  bool reset_traces_on_episode = true;

  void validate() const;
  const std::string& trace_for(double value) const;
};

struct AggregatedFeedback {
  double value = 0.0;
  std::string trace_id;
  std::size_t count = 0;
  /// More than one trace id appeared in the window; the last event's won.
  bool mixed_traces = false;
};

/// Sums the values of every event in one decision cycle. The trace is the
/// last event's; an empty window yields (0, default trace).
AggregatedFeedback aggregate_feedback(std::span<const FeedbackEvent> events, const CoachConfig& config);

/// Named eligibility traces, one decay rate each.
class TraceSet {
 public:
  TraceSet(const std::map<std::string, double>& lambdas, std::size_t dimension);

  std::size_t size() const { return traces_.size(); }
  std::size_t dimension() const { return dimension_; }
  bool contains(const std::string& id) const { return traces_.count(id) != 0; }
  double lambda(const std::string& id) const { return traces_.at(id).lambda; }
  std::span<const double> vector(const std::string& id) const { return traces_.at(id).e; }

  /// e <- lambda e (+ g when g is non-empty), for every trace.
  void decay_and_accumulate(std::span<const double> g);
  void reset();

 private:
  struct Trace {
    double lambda;
    std::vector<double> e;
  };
  std::size_t dimension_;
  std::map<std::string, Trace> traces_;
};

enum class StepStatus { applied, no_feedback, rejected_non_finite };

/// Real-time COACH: delayed credit through multiple eligibility traces.
///
/// The owner records each decision (features, action) as it is taken and
/// then calls step() once per decision cycle with that cycle's summed
/// feedback. Traces accumulate the update direction of the decision made
/// delay_steps earlier, evaluated under the current parameters; the
/// parameters then move by alpha * f * e_trace.
class CoachLearner {
 public:
  CoachLearner(ParamPolicy policy, CoachConfig config);

  const ParamPolicy& policy() const { return policy_; }
  ParamPolicy& mutable_policy() { return policy_; }
  const CoachConfig& config() const { return config_; }
  const TraceSet& traces() const { return traces_; }
  std::size_t decisions() const { return decisions_; }

  void record_decision(std::span<const double> features, ActionId action);

  /// One pass of the trace/parameter update. Throws std::invalid_argument on
  /// an unknown trace id; non-finite feedback leaves every state untouched.
  StepStatus step(double feedback, const std::string& trace_id);
  StepStatus step(const AggregatedFeedback& feedback) { return step(feedback.value, feedback.trace_id); }

  /// Clears the decision history and, when configured, the traces.
  void begin_episode();

 private:
  struct Decision {
    std::vector<double> features;
    ActionId action;
  };

  ParamPolicy policy_;
  CoachConfig config_;
  TraceSet traces_;
  std::deque<Decision> history_;
  std::vector<double> direction_;
  std::size_t decisions_ = 0;
};

}  // namespace coachlab
