#include "coachlab/coach.hpp"

#include <cmath>
#include <stdexcept>

namespace coachlab {

void CoachConfig::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("coach alpha must be positive");
  if (traces.empty()) throw std::invalid_argument("coach needs at least one trace");
  for (const auto& [id, lambda] : traces) {
    if (!(lambda >= 0.0 && lambda < 1.0)) throw std::invalid_argument("trace '" + id + "' lambda must lie in [0, 1)");
  }
  if (!traces.count(default_trace)) throw std::invalid_argument("default trace '" + default_trace + "' is not configured");
  for (const auto& [value, id] : feedback_map) {
    if (!traces.count(id)) throw std::invalid_argument("feedback map names unknown trace '" + id + "'");
  }
}

const std::string& CoachConfig::trace_for(double value) const {
  const auto it = feedback_map.find(value);
  return it == feedback_map.end() ? default_trace : it->second;
}

AggregatedFeedback aggregate_feedback(std::span<const FeedbackEvent> events, const CoachConfig& config) {
  AggregatedFeedback out;
  out.trace_id = config.default_trace;
  for (const FeedbackEvent& e : events) {
    if (out.count > 0 && e.trace_id != out.trace_id) out.mixed_traces = true;
    out.value += e.value;
    out.trace_id = e.trace_id;
    ++out.count;
  }
  return out;
}

TraceSet::TraceSet(const std::map<std::string, double>& lambdas, std::size_t dimension) : dimension_(dimension) {
  for (const auto& [id, lambda] : lambdas) traces_.emplace(id, Trace{lambda, std::vector<double>(dimension, 0.0)});
}

void TraceSet::decay_and_accumulate(std::span<const double> g) {
  if (!g.empty() && g.size() != dimension_) throw std::invalid_argument("trace increment has wrong dimension");
  for (auto& [id, trace] : traces_) {
    const double lambda = trace.lambda;
    if (g.empty()) {
      for (double& v : trace.e) v = lambda * v;
    } else {
      for (std::size_t i = 0; i < dimension_; ++i) trace.e[i] = lambda * trace.e[i] + g[i];
    }
  }
}

void TraceSet::reset() {
  for (auto& [id, trace] : traces_) std::fill(trace.e.begin(), trace.e.end(), 0.0);
}

CoachLearner::CoachLearner(ParamPolicy policy, CoachConfig config)
    : policy_(std::move(policy)),
      config_(std::move(config)),
      traces_(config_.traces, policy_.num_parameters()),
      direction_(policy_.num_parameters()) {
  config_.validate();
}

void CoachLearner::record_decision(std::span<const double> features, ActionId action) {
  if (features.size() != policy_.feature_dim()) throw std::invalid_argument("feature vector has wrong dimension");
  if (action >= policy_.num_actions()) throw std::out_of_range("action out of range");
  history_.push_back({std::vector<double>(features.begin(), features.end()), action});
  while (history_.size() > config_.delay_steps + 1) history_.pop_front();
  ++decisions_;
}

StepStatus CoachLearner::step(double feedback, const std::string& trace_id) {
  if (!traces_.contains(trace_id)) throw std::invalid_argument("unknown trace '" + trace_id + "'");
  if (!std::isfinite(feedback)) return StepStatus::rejected_non_finite;

  if (history_.size() == config_.delay_steps + 1) {
    const Decision& credited = history_.front();
    policy_.update_direction(credited.features, credited.action, config_.update_mode, direction_);
    traces_.decay_and_accumulate(direction_);
  } else {
    traces_.decay_and_accumulate({});
  }

  if (feedback == 0.0) return StepStatus::no_feedback;
  policy_.add_scaled(config_.alpha * feedback, traces_.vector(trace_id));
  return StepStatus::applied;
}

void CoachLearner::begin_episode() {
  history_.clear();
  if (config_.reset_traces_on_episode) traces_.reset();
}

}  // namespace coachlab
