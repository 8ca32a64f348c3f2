#pragma once

#include <json.hpp>

#include "dicode/core/types.hpp"

namespace dicode::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  Adam(Index num_params, AdamConfig config);

  /// One update of `params` along -grad using the configured learning rate.
  void step(Vec& params, const Vec& grad) { step(params, grad, config_.lr); }
  void step(Vec& params, const Vec& grad, double lr);

  const AdamConfig& config() const { return config_; }
  long long steps() const { return steps_; }

  nlohmann::json state() const;
  void load_state(const nlohmann::json& j);

 private:
  AdamConfig config_;
  Vec m_, v_;
  long long steps_ = 0;
};

/// Rescales `grad` in place so its norm is at most max_norm. Returns the pre-clip norm.
double clip_grad_norm(Vec& grad, double max_norm);

}  // namespace dicode::nn
