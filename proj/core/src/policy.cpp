#include "coachlab/policy.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace coachlab {

void TabularFeatures::features(StateId s, std::span<double> out) const {
  if (s >= num_states_) throw std::out_of_range("state outside tabular feature map");
  std::fill(out.begin(), out.end(), 0.0);
  out[s] = 1.0;
}

BiasMode parse_bias_mode(std::string_view name) {
  if (name == "none") return BiasMode::none;
  if (name == "tanh" || name == "saturating") return BiasMode::saturating;
  if (name == "tanh_direct" || name == "saturating_direct") return BiasMode::saturating_direct;
  throw std::invalid_argument("unknown bias mode '" + std::string(name) + "'");
}

std::string_view to_string(BiasMode mode) {
  switch (mode) {
    case BiasMode::none: return "none";
    case BiasMode::saturating: return "tanh";
    case BiasMode::saturating_direct: return "tanh_direct";
  }
  return "?";
}

UpdateMode parse_update_mode(std::string_view name) {
  if (name == "likelihood_ratio") return UpdateMode::likelihood_ratio;
  if (name == "preference_direct") return UpdateMode::preference_direct;
  throw std::invalid_argument("unknown update mode '" + std::string(name) + "'");
}

std::string_view to_string(UpdateMode mode) {
  return mode == UpdateMode::likelihood_ratio ? "likelihood_ratio" : "preference_direct";
}

ParamPolicy::ParamPolicy(std::size_t feature_dim, std::size_t num_actions, BiasMode bias)
    : feature_dim_(feature_dim),
      num_actions_(num_actions),
      bias_(bias),
      params_(num_actions * feature_dim + (bias == BiasMode::none ? 0 : num_actions), 0.0) {
  if (num_actions == 0) throw std::invalid_argument("policy needs at least one action");
}

void ParamPolicy::set_parameters(std::span<const double> params) {
  if (params.size() != params_.size()) throw std::invalid_argument("parameter vector has wrong size");
  std::copy(params.begin(), params.end(), params_.begin());
}

double ParamPolicy::bias(ActionId a) const {
  return bias_ == BiasMode::none ? 0.0 : params_[num_actions_ * feature_dim_ + a];
}

double ParamPolicy::bias_term(ActionId a) const {
  return bias_ == BiasMode::none ? 0.0 : std::tanh(params_[num_actions_ * feature_dim_ + a]);
}

void ParamPolicy::preferences(std::span<const double> x, std::span<double> out) const {
  if (x.size() != feature_dim_) throw std::invalid_argument("feature vector has wrong dimension");
  if (out.size() != num_actions_) throw std::invalid_argument("output has wrong size");
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite feature value");
  }
  for (ActionId a = 0; a < num_actions_; ++a) {
    const double* w = params_.data() + a * feature_dim_;
    double h = 0.0;
    for (std::size_t i = 0; i < feature_dim_; ++i) h += w[i] * x[i];
    out[a] = h + bias_term(a);
  }
}

std::vector<double> ParamPolicy::preferences(std::span<const double> x) const {
  std::vector<double> out(num_actions_);
  preferences(x, out);
  return out;
}

void ParamPolicy::action_distribution(std::span<const double> x, std::span<double> out) const {
  preferences(x, out);
  const double max_h = *std::max_element(out.begin(), out.end());
  double total = 0.0;
  for (double& h : out) {
    h = std::exp(h - max_h);
    total += h;
  }
  for (double& p : out) p /= total;
}

std::vector<double> ParamPolicy::action_distribution(std::span<const double> x) const {
  std::vector<double> out(num_actions_);
  action_distribution(x, out);
  return out;
}

std::vector<double> ParamPolicy::score(std::span<const double> x, ActionId a) const {
  if (a >= num_actions_) throw std::out_of_range("action out of range");
  const std::vector<double> pi = action_distribution(x);
  std::vector<double> g(params_.size(), 0.0);
  for (ActionId b = 0; b < num_actions_; ++b) {
    const double coeff = (b == a ? 1.0 : 0.0) - pi[b];
    double* block = g.data() + b * feature_dim_;
    for (std::size_t i = 0; i < feature_dim_; ++i) block[i] = coeff * x[i];
    if (bias_ != BiasMode::none) {
      const double t = std::tanh(params_[num_actions_ * feature_dim_ + b]);
      g[num_actions_ * feature_dim_ + b] = coeff * (1.0 - t * t);
    }
  }
  return g;
}

void ParamPolicy::update_direction(std::span<const double> x, ActionId a, UpdateMode mode,
                                   std::span<double> out) const {
  if (a >= num_actions_) throw std::out_of_range("action out of range");
  if (out.size() != params_.size()) throw std::invalid_argument("direction has wrong size");
  std::vector<double> pi(num_actions_);
  action_distribution(x, pi);
  for (ActionId b = 0; b < num_actions_; ++b) {
    double coeff;
    if (mode == UpdateMode::likelihood_ratio) {
      coeff = (b == a ? 1.0 : 0.0) - pi[b];
    } else {
      coeff = b == a ? 1.0 : -pi[b];
    }
    double* block = out.data() + b * feature_dim_;
    for (std::size_t i = 0; i < feature_dim_; ++i) block[i] = coeff * x[i];
    if (bias_ == BiasMode::saturating) {
      const double t = std::tanh(params_[num_actions_ * feature_dim_ + b]);
      out[num_actions_ * feature_dim_ + b] = coeff * (1.0 - t * t);
    } else if (bias_ == BiasMode::saturating_direct) {
      out[num_actions_ * feature_dim_ + b] = coeff;
    }
  }
}

std::vector<double> ParamPolicy::update_direction(std::span<const double> x, ActionId a, UpdateMode mode) const {
  std::vector<double> out(params_.size());
  update_direction(x, a, mode, out);
  return out;
}

void ParamPolicy::add_scaled(double scale, std::span<const double> direction) {
  if (direction.size() != params_.size()) throw std::invalid_argument("direction has wrong size");
  for (std::size_t i = 0; i < params_.size(); ++i) params_[i] += scale * direction[i];
}

void ParamPolicy::apply_feedback_update(std::span<const double> x, ActionId a, double f, double alpha,
                                        UpdateMode mode) {
  if (!std::isfinite(f)) throw std::invalid_argument("feedback must be finite");
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (f == 0.0) return;
  const std::vector<double> direction = update_direction(x, a, mode);
  add_scaled(alpha * f, direction);
}

ActionId ParamPolicy::greedy_action(std::span<const double> x) const {
  const std::vector<double> h = preferences(x);
  return static_cast<ActionId>(std::max_element(h.begin(), h.end()) - h.begin());
}

std::string ParamPolicy::serialize() const {
  std::string out = "coachlab-policy 1 features=" + std::to_string(feature_dim_) +
                    " actions=" + std::to_string(num_actions_) + " bias=" + std::string(to_string(bias_)) + "\n";
  char buf[32];
  for (double p : params_) {
    std::snprintf(buf, sizeof buf, "%.17g\n", p);
    out += buf;
  }
  return out;
}

ParamPolicy ParamPolicy::deserialize(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string magic;
  int version = 0;
  std::string features_kv;
  std::string actions_kv;
  std::string bias_kv;
  if (!(in >> magic >> version >> features_kv >> actions_kv >> bias_kv) || magic != "coachlab-policy" || version != 1) {
    throw std::invalid_argument("not a coachlab policy checkpoint");
  }
  auto value_of = [](const std::string& kv, std::string_view key) {
    if (kv.rfind(std::string(key) + "=", 0) != 0) throw std::invalid_argument("malformed policy header field " + kv);
    return kv.substr(key.size() + 1);
  };
  auto parse_size = [](const std::string& s) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw std::invalid_argument("malformed policy header size");
    return v;
  };
  ParamPolicy policy(parse_size(value_of(features_kv, "features")), parse_size(value_of(actions_kv, "actions")),
                     parse_bias_mode(value_of(bias_kv, "bias")));
  for (double& p : policy.params_) {
    std::string token;
    if (!(in >> token)) throw std::invalid_argument("policy checkpoint truncated");
    p = std::stod(token);
  }
  std::string extra;
  if (in >> extra) throw std::invalid_argument("policy checkpoint has trailing data");
  return policy;
}

TabularPolicy tabulate(const ParamPolicy& policy, const FeatureMap& features, std::size_t num_states) {
  const std::size_t actions = policy.num_actions();
  std::vector<double> probs(num_states * actions);
  std::vector<double> x(features.dimension());
  for (StateId s = 0; s < num_states; ++s) {
    features.features(s, x);
    policy.action_distribution(x, std::span<double>(probs.data() + s * actions, actions));
  }
  return TabularPolicy(num_states, actions, std::move(probs));
}

TabularPolicy greedy_tabular(const ParamPolicy& policy, const FeatureMap& features, std::size_t num_states) {
  std::vector<ActionId> actions(num_states);
  std::vector<double> x(features.dimension());
  for (StateId s = 0; s < num_states; ++s) {
    features.features(s, x);
    actions[s] = policy.greedy_action(x);
  }
  return TabularPolicy::deterministic(actions, policy.num_actions());
}

}  // namespace coachlab
