#include "dicode/nn/adam.hpp"

#include <cmath>

#include "dicode/core/errors.hpp"
#include "dicode/nn/json_util.hpp"

namespace dicode::nn {

Adam::Adam(Index num_params, AdamConfig config)
    : config_(config), m_(Vec::Zero(num_params)), v_(Vec::Zero(num_params)) {}

void Adam::step(Vec& params, const Vec& grad, double lr) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw InvalidArgument("Adam::step: size mismatch");
  ++steps_;
  m_ = config_.beta1 * m_ + (1.0 - config_.beta1) * grad;
  v_ = config_.beta2 * v_ + (1.0 - config_.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  params.array() -= lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + config_.eps);
}

nlohmann::json Adam::state() const {
  return {{"lr", config_.lr},       {"beta1", config_.beta1}, {"beta2", config_.beta2},
          {"eps", config_.eps},     {"steps", steps_},        {"m", vec_to_json(m_)},
          {"v", vec_to_json(v_)}};
}

void Adam::load_state(const nlohmann::json& j) {
  config_.lr = j.at("lr");
  config_.beta1 = j.at("beta1");
  config_.beta2 = j.at("beta2");
  config_.eps = j.at("eps");
  steps_ = j.at("steps");
  m_ = vec_from_json(j.at("m"));
  v_ = vec_from_json(j.at("v"));
}

double clip_grad_norm(Vec& grad, double max_norm) {
  const double norm = grad.norm();
  if (max_norm > 0.0 && norm > max_norm) grad *= max_norm / norm;
  return norm;
}

}  // namespace dicode::nn
