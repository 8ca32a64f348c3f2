#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "dicode/core/rng.hpp"
#include "dicode/core/types.hpp"
#include "dicode/diffusion/schedule.hpp"
#include "dicode/nn/mlp.hpp"

namespace dicode::diffusion {

/// Noise predictor eps(x_t, t). Implementations must be deterministic and
/// safe for concurrent const use.
class Denoiser {
 public:
  virtual ~Denoiser() = default;

  virtual Index dim() const = 0;
  /// Predicted noise for each column of x; t[j] is the step of column j.
  virtual Mat predict(const Mat& x, std::span<const int> t) const = 0;
  /// (d eps / d x)^T * cotangent for a single sample.
  virtual Vec input_vjp(const Vec& x, int t, const Vec& cotangent) const = 0;

  Vec predict(const Vec& x, int t) const;
};

/// Sinusoidal step features, one column per entry of t.
Mat time_embedding(std::span<const int> t, int features);

/// MLP over [x ; time_embedding(t)].
class MlpDenoiser final : public Denoiser {
 public:
  MlpDenoiser(Index dim, const std::vector<int>& hidden, int time_features, Rng& rng,
              nn::Activation activation = nn::Activation::Silu);

  Index dim() const override { return dim_; }
  using Denoiser::predict;
  Mat predict(const Mat& x, std::span<const int> t) const override;
  Vec input_vjp(const Vec& x, int t, const Vec& cotangent) const override;

  /// Mean over all entries of (predict(x,t) - target)^2. Adds its parameter
  /// gradient into `grad` (resized and zeroed if empty).
  double mse_and_grad(const Mat& x, std::span<const int> t, const Mat& target, Vec& grad) const;

  Vec& params() { return net_.params(); }
  const Vec& params() const { return net_.params(); }
  const nn::Mlp& net() const { return net_; }
  int time_features() const { return time_features_; }

  nlohmann::json to_json() const;
  static MlpDenoiser from_json(const nlohmann::json& j);

 private:
  MlpDenoiser() = default;
  Mat features(const Mat& x, std::span<const int> t) const;

  Index dim_ = 0;
  int time_features_ = 0;
  nn::Mlp net_;
};

/// Exact posterior-mean denoiser for data uniformly distributed over a finite
/// point set. With a single point this is the "oracle" that returns the true
/// noise of any noisify(point, eps, t).
class PointSetDenoiser final : public Denoiser {
 public:
  PointSetDenoiser(std::vector<Vec> points, const NoiseSchedule& schedule);

  Index dim() const override { return points_.front().size(); }
  using Denoiser::predict;
  Mat predict(const Mat& x, std::span<const int> t) const override;
  Vec input_vjp(const Vec& x, int t, const Vec& cotangent) const override;

  /// Posterior weights over the points given x at step t.
  Vec weights(const Vec& x, int t) const;

 private:
  std::vector<Vec> points_;
  std::vector<double> alpha_bars_;
};

}  // namespace dicode::diffusion
