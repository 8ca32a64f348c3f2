#pragma once

#include <functional>
#include <span>

#include <json.hpp>

#include "dicode/core/rng.hpp"
#include "dicode/core/types.hpp"
#include "dicode/diffusion/schedule.hpp"
#include "dicode/nn/adam.hpp"
#include "dicode/nn/mlp.hpp"

namespace dicode::guidance {

/// Differentiable scalar value over clean-domain designs.
class EnvCritic {
 public:
  virtual ~EnvCritic() = default;
  virtual Index dim() const = 0;
  virtual double value(const Vec& x) const = 0;
  virtual Vec gradient(const Vec& x) const = 0;
};

/// v(x) = -|x - c|^2
class QuadraticCritic final : public EnvCritic {
 public:
  explicit QuadraticCritic(Vec centre) : c_(std::move(centre)) {}
  Index dim() const override { return c_.size(); }
  double value(const Vec& x) const override { return -(x - c_).squaredNorm(); }
  Vec gradient(const Vec& x) const override { return -2.0 * (x - c_); }
  const Vec& centre() const { return c_; }

 private:
  Vec c_;
};

/// Rastrigin-style landscape with its global maximum (0) at c:
/// v(x) = -sum_i [(x_i - c_i)^2 + a (1 - cos(2 pi f (x_i - c_i)))]
class MultimodalCritic final : public EnvCritic {
 public:
  MultimodalCritic(Vec centre, double amplitude = 0.3, double frequency = 2.0)
      : c_(std::move(centre)), a_(amplitude), f_(frequency) {}
  Index dim() const override { return c_.size(); }
  double value(const Vec& x) const override;
  Vec gradient(const Vec& x) const override;

 private:
  Vec c_;
  double a_, f_;
};

class LambdaCritic final : public EnvCritic {
 public:
  LambdaCritic(Index dim, std::function<double(const Vec&)> value, std::function<Vec(const Vec&)> gradient)
      : dim_(dim), value_(std::move(value)), gradient_(std::move(gradient)) {}
  Index dim() const override { return dim_; }
  double value(const Vec& x) const override { return value_(x); }
  Vec gradient(const Vec& x) const override { return gradient_(x); }

 private:
  Index dim_;
  std::function<double(const Vec&)> value_;
  std::function<Vec(const Vec&)> gradient_;
};

/// MLP regressor from designs to a scalar (the learned environment critic).
class MlpCritic final : public EnvCritic {
 public:
  MlpCritic(Index dim, const std::vector<int>& hidden, Rng& rng, nn::Activation act = nn::Activation::Silu);

  Index dim() const override { return net_.input_dim(); }
  double value(const Vec& x) const override;
  Vec gradient(const Vec& x) const override;
  Vec values(const Mat& x) const;

  /// Sum over columns of (v(x_j) - y_j)^2; adds the parameter gradient into `grad`.
  double sse_and_grad(const Mat& x, const Vec& y, Vec& grad) const;

  Vec& params() { return net_.params(); }
  const Vec& params() const { return net_.params(); }
  nlohmann::json to_json() const { return net_.to_json(); }
  static MlpCritic from_json(const nlohmann::json& j);

 private:
  MlpCritic() = default;
  nn::Mlp net_;
};

/// Time-conditioned critic on noisy designs, used by the classifier-guidance
/// ablation.
class NoisyCritic {
 public:
  NoisyCritic(Index dim, const std::vector<int>& hidden, int time_features, Rng& rng);

  Index dim() const { return dim_; }
  double value(const Vec& x_t, int t) const;
  Vec gradient(const Vec& x_t, int t) const;

  /// Regression on (noisify(theta, eps, t), t) -> y pairs with t drawn
  /// uniformly. Returns the mean squared error of the last step.
  double train(const Mat& designs, const Vec& targets, const diffusion::NoiseSchedule& s, int iters, int batch,
               double lr, Rng& rng);

  nlohmann::json to_json() const;
  void load_json(const nlohmann::json& j);

 private:
  Mat features(const Mat& x, std::span<const int> t) const;
  Index dim_;
  int time_features_;
  nn::Mlp net_;
  nn::Adam opt_;
};

/// Largest relative error between the critic gradient and central
/// differences over the given inputs: |g - g_fd| / max(|g_fd|, floor).
double gradient_check(const EnvCritic& v, const std::vector<Vec>& inputs, double h = 1e-5, double floor = 1e-6);

}  // namespace dicode::guidance
