#include "coachlab/trainers.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace coachlab {

TrainerKind parse_trainer_kind(std::string_view name) {
  if (name == "none") return TrainerKind::none;
  if (name == "advantage") return TrainerKind::advantage;
  if (name == "qvalue") return TrainerKind::qvalue;
  if (name == "reward_exemplar") return TrainerKind::reward_exemplar;
  throw std::invalid_argument("unknown trainer kind '" + std::string(name) + "'");
}

std::string_view to_string(TrainerKind kind) {
  switch (kind) {
    case TrainerKind::none: return "none";
    case TrainerKind::advantage: return "advantage";
    case TrainerKind::qvalue: return "qvalue";
    case TrainerKind::reward_exemplar: return "reward_exemplar";
  }
  return "?";
}

Quantizer parse_quantizer(std::string_view name) {
  if (name == "none") return Quantizer::none;
  if (name == "human_scale") return Quantizer::human_scale;
  if (name == "sign") return Quantizer::sign;
  throw std::invalid_argument("unknown quantizer '" + std::string(name) + "'");
}

std::string_view to_string(Quantizer q) {
  switch (q) {
    case Quantizer::none: return "none";
    case Quantizer::human_scale: return "human_scale";
    case Quantizer::sign: return "sign";
  }
  return "?";
}

void TrainerConfig::validate() const {
  if (!(sparsity >= 0.0 && sparsity <= 1.0)) throw std::invalid_argument("trainer sparsity must lie in [0, 1]");
  if (!(quantize_epsilon >= 0.0) || !(quantize_big > quantize_epsilon)) {
    throw std::invalid_argument("quantizer thresholds need 0 <= epsilon < big");
  }
  if (!std::isfinite(scale)) throw std::invalid_argument("trainer scale must be finite");
  if (!(eval_tol > 0.0)) throw std::invalid_argument("trainer evaluation tolerance must be positive");
}

std::optional<double> human_scale_quantize(double f, double epsilon, double big) {
  if (std::abs(f) <= epsilon) return std::nullopt;
  if (f < 0.0) return -1.0;
  return f > big ? 4.0 : 1.0;
}

OracleTrainer::OracleTrainer(const Mdp& mdp, TrainerConfig config, std::uint64_t seed)
    : mdp_(mdp), config_(config), rng_(seed) {
  config_.validate();
  if (config_.kind == TrainerKind::reward_exemplar) optimal_q_ = value_iteration(mdp_, config_.eval_tol).q;
}

const QTable& OracleTrainer::learner_q(const TabularPolicy& policy) {
  if (cached_q_ && cached_policy_ == policy.data()) return *cached_q_;
  EvaluationOptions options;
  options.tol = config_.eval_tol;
  options.initial = warm_values_;
  warm_values_ = evaluate_policy(mdp_, policy, options);
  cached_q_ = action_values(mdp_, warm_values_);
  cached_policy_ = policy.data();
  return *cached_q_;
}

double OracleTrainer::raw_feedback(const TabularPolicy& policy, StateId s, ActionId a) {
  switch (config_.kind) {
    case TrainerKind::none:
      return 0.0;
    case TrainerKind::reward_exemplar:
      return (*optimal_q_)(s, a);
    case TrainerKind::qvalue:
      return learner_q(policy)(s, a);
    case TrainerKind::advantage: {
      const QTable& q = learner_q(policy);
      double v = 0.0;
      for (ActionId b = 0; b < mdp_.num_actions(); ++b) v += policy(s, b) * q(s, b);
      return q(s, a) - v;
    }
  }
  return 0.0;
}

std::vector<OracleFeedback> OracleTrainer::observe(std::size_t t, const TabularPolicy* policy, StateId s, ActionId a) {
  if (config_.kind != TrainerKind::none) {
    const TabularPolicy* judged = nullptr;
    if (needs_policy()) {
      if (policy == nullptr) throw std::invalid_argument("trainer needs the learner policy");
      snapshots_.push_back(*policy);
      while (snapshots_.size() > config_.staleness + 1) snapshots_.pop_front();
      judged = &snapshots_.front();
    }
    const bool gives = uniform01(rng_) < config_.sparsity;
    if (gives) {
      std::optional<double> f = config_.scale * raw_feedback(judged ? *judged : TabularPolicy(1, 1), s, a);
      switch (config_.quantize) {
        case Quantizer::none: break;
        case Quantizer::human_scale: f = human_scale_quantize(*f, config_.quantize_epsilon, config_.quantize_big); break;
        case Quantizer::sign:
          f = *f > 0.0 ? std::optional(1.0) : *f < 0.0 ? std::optional(-1.0) : std::nullopt;
          break;
      }
      if (f) pending_.push_back({t + config_.delay_steps, {*f, t}});
    }
  }

  std::vector<OracleFeedback> due;
  while (!pending_.empty() && pending_.front().due <= t) {
    due.push_back(pending_.front().feedback);
    pending_.pop_front();
  }
  return due;
}

Mdp build_policy_shaping_scenario(std::array<double, 3> rewards, double gamma) {
  Mdp::Builder builder(2, 3, gamma);
  for (ActionId a = 0; a < 3; ++a) builder.add_outcome(0, a, 1, 1.0, rewards[a]);
  builder.set_terminal(1);
  return builder.build();
}

}  // namespace coachlab
