#include "coachlab/tamer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace coachlab {

void CreditWindow::validate() const {
  if (min_age.count() < 0 || !(min_age < max_age)) throw std::invalid_argument("credit window needs 0 <= min_age < max_age");
  if (step_period.count() <= 0) throw std::invalid_argument("credit window step period must be positive");
}

std::vector<Credit> credit_weights(Timestamp feedback_time, std::span<const Timestamp> step_times,
                                   const CreditWindow& window) {
  std::vector<Credit> out;
  for (std::size_t i = 0; i < step_times.size(); ++i) {
    if (i > 0 && step_times[i] < step_times[i - 1]) throw std::invalid_argument("step times must be non-decreasing");
    const Timestamp age = feedback_time - step_times[i];
    if (age >= window.min_age && age <= window.max_age) out.push_back({i, 0.0});
  }
  const double w = out.empty() ? 0.0 : 1.0 / static_cast<double>(out.size());
  for (Credit& c : out) c.weight = w;
  return out;
}

RewardModel::RewardModel(std::size_t feature_dim, std::size_t num_actions, double alpha, double initial_weight)
    : feature_dim_(feature_dim), num_actions_(num_actions), alpha_(alpha), weights_(feature_dim * num_actions, initial_weight) {
  if (num_actions == 0) throw std::invalid_argument("reward model needs at least one action");
  set_alpha(alpha);
}

void RewardModel::set_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("tamer alpha must be positive");
  alpha_ = alpha;
}

double RewardModel::estimate(std::span<const double> x, ActionId a) const {
  if (x.size() != feature_dim_) throw std::invalid_argument("feature vector has wrong dimension");
  const auto w = weights(a);
  double h = 0.0;
  for (std::size_t i = 0; i < feature_dim_; ++i) h += w[i] * x[i];
  return h;
}

std::vector<double> RewardModel::estimates(std::span<const double> x) const {
  std::vector<double> out(num_actions_);
  for (ActionId a = 0; a < num_actions_; ++a) out[a] = estimate(x, a);
  return out;
}

void RewardModel::update(std::span<const CreditedPair> credited, double f) {
  if (!std::isfinite(f)) throw std::invalid_argument("feedback must be finite");
  std::vector<double> errors;
  errors.reserve(credited.size());
  for (const CreditedPair& c : credited) {
    if (c.action >= num_actions_) throw std::out_of_range("action out of range");
    errors.push_back(f - estimate(c.features, c.action));
  }
  for (std::size_t k = 0; k < credited.size(); ++k) {
    const CreditedPair& c = credited[k];
    const double step = alpha_ * c.weight * errors[k];
    double* w = weights_.data() + c.action * feature_dim_;
    for (std::size_t i = 0; i < feature_dim_; ++i) w[i] += step * c.features[i];
  }
}

ActionId RewardModel::act(std::span<const double> x) const {
  const std::vector<double> h = estimates(x);
  return static_cast<ActionId>(std::max_element(h.begin(), h.end()) - h.begin());
}

TamerLearner::TamerLearner(RewardModel model, CreditWindow window) : model_(std::move(model)), window_(window) {
  window_.validate();
}

void TamerLearner::record_decision(Timestamp time, std::span<const double> features, ActionId action) {
  if (!history_.empty() && time < history_.back().time) throw std::invalid_argument("decision times must be non-decreasing");
  history_.push_back({time, std::vector<double>(features.begin(), features.end()), action});
  // Steps older than the window can never be credited again.
  while (!history_.empty() && time - history_.front().time > window_.max_age) history_.pop_front();
}

std::size_t TamerLearner::give_feedback(Timestamp time, double f) {
  std::vector<Timestamp> times;
  times.reserve(history_.size());
  for (const Step& s : history_) times.push_back(s.time);
  const std::vector<Credit> credits = credit_weights(time, times, window_);
  std::vector<CreditedPair> pairs;
  pairs.reserve(credits.size());
  for (const Credit& c : credits) {
    const Step& s = history_[c.index];
    pairs.push_back({s.features, s.action, c.weight});
  }
  model_.update(pairs, f);
  return pairs.size();
}

}  // namespace coachlab
