#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coachlab/mdp.hpp"

namespace coachlab {

/// Maps an environment state to a fixed-length feature vector x(s).
class FeatureMap {
 public:
  virtual ~FeatureMap() = default;
  virtual std::size_t dimension() const = 0;
  virtual void features(StateId s, std::span<double> out) const = 0;

  std::vector<double> operator()(StateId s) const {
    std::vector<double> x(dimension());
    features(s, x);
    return x;
  }
};

/// One-hot state indicator.
class TabularFeatures final : public FeatureMap {
 public:
  explicit TabularFeatures(std::size_t num_states) : num_states_(num_states) {}
  std::size_t dimension() const override { return num_states_; }
  void features(StateId s, std::span<double> out) const override;

 private:
  std::size_t num_states_;
};

/// How the per-action bias parameter enters the preference.
///  - none: h(s,a) = w_a . x(s)
///  - saturating: h(s,a) = w_a . x(s) + tanh(theta_a), gradient includes 1 - tanh^2
///  - saturating_direct: same preference, but tanh(theta_a) is updated as if it
///    were the parameter (no chain-rule factor)
enum class BiasMode { none, saturating, saturating_direct };

/// Plain likelihood-ratio (score function) step, or the actor-critic variant that moves the
/// chosen action's preference by +1 and every other action b by -pi(s,b).
enum class UpdateMode { likelihood_ratio, preference_direct };

BiasMode parse_bias_mode(std::string_view name);
std::string_view to_string(BiasMode mode);
UpdateMode parse_update_mode(std::string_view name);
std::string_view to_string(UpdateMode mode);

/// Softmax policy, linear in features, with optional saturating bias.
///
/// Parameters are one flat vector: weight blocks w_0 .. w_{A-1} (each of
/// feature dimension), followed by A bias parameters when a bias mode is set.
class ParamPolicy {
 public:
  ParamPolicy(std::size_t feature_dim, std::size_t num_actions, BiasMode bias = BiasMode::none);

  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t num_actions() const { return num_actions_; }
  BiasMode bias_mode() const { return bias_; }
  std::size_t num_parameters() const { return params_.size(); }

  std::span<const double> parameters() const { return params_; }
  std::span<double> mutable_parameters() { return params_; }
  void set_parameters(std::span<const double> params);

  std::span<const double> weights(ActionId a) const { return {params_.data() + a * feature_dim_, feature_dim_}; }
  double bias(ActionId a) const;

  void preferences(std::span<const double> x, std::span<double> out) const;
  std::vector<double> preferences(std::span<const double> x) const;

  /// Max-subtracted softmax of the preferences. Throws std::invalid_argument
  /// on non-finite features.
  void action_distribution(std::span<const double> x, std::span<double> out) const;
  std::vector<double> action_distribution(std::span<const double> x) const;

  /// grad log pi(s, a). Weight block b is (1[b=a] - pi(s,b)) x(s); bias b is
  /// (1[b=a] - pi(s,b)) scaled by 1 - tanh^2(theta_b) in saturating mode.
  std::vector<double> score(std::span<const double> x, ActionId a) const;

  /// Parameter direction credited for taking a at x: the score in
  /// likelihood-ratio mode, the preference-direct step otherwise.
  void update_direction(std::span<const double> x, ActionId a, UpdateMode mode, std::span<double> out) const;
  std::vector<double> update_direction(std::span<const double> x, ActionId a, UpdateMode mode) const;

  /// params += scale * direction
  void add_scaled(double scale, std::span<const double> direction);

  /// params += alpha * f * direction(x, a). Throws on non-finite f or alpha <= 0.
  void apply_feedback_update(std::span<const double> x, ActionId a, double f, double alpha,
                             UpdateMode mode = UpdateMode::likelihood_ratio);

  /// Lowest-index argmax of the preferences.
  ActionId greedy_action(std::span<const double> x) const;

  /// Text checkpoint: a header line naming feature dimension, action count
  /// and bias mode, then one parameter per line at round-trip precision.
  std::string serialize() const;
  static ParamPolicy deserialize(std::string_view text);

  bool operator==(const ParamPolicy&) const = default;

 private:
  double bias_term(ActionId a) const;

  std::size_t feature_dim_;
  std::size_t num_actions_;
  BiasMode bias_;
  std::vector<double> params_;
};

/// pi(s, .) for every state, as a table the MDP oracles accept.
TabularPolicy tabulate(const ParamPolicy& policy, const FeatureMap& features, std::size_t num_states);

/// Deterministic greedy policy for every state.
TabularPolicy greedy_tabular(const ParamPolicy& policy, const FeatureMap& features, std::size_t num_states);

}  // namespace coachlab
