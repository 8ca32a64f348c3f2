#pragma once

#include <optional>
#include <vector>

namespace dicode::diffusion {

/// Discrete variance schedule. Index t runs over 1..T for beta and 0..T for
/// alpha_bar, with alpha_bar(0) == 1 and alpha_bar(t) = alpha_bar(t-1) * (1 - beta(t)).
class NoiseSchedule {
 public:
  /// Arbitrary betas in [0, 1). Zero betas give noiseless steps (used to
  /// probe edge behaviour); make_schedule is the production constructor.
  static NoiseSchedule from_betas(std::vector<double> betas);

  int T() const { return static_cast<int>(betas_.size()); }
  double beta(int t) const;
  double alpha_bar(int t) const;
  const std::vector<double>& betas() const { return betas_; }
  const std::vector<double>& alpha_bars() const { return alpha_bars_; }

  /// (beta_start, beta_end) when built by make_schedule.
  std::optional<std::pair<double, double>> linear_endpoints() const { return linear_; }

 private:
  friend NoiseSchedule make_schedule(int T, double beta_start, double beta_end);
  std::vector<double> betas_;
  std::vector<double> alpha_bars_;
  std::optional<std::pair<double, double>> linear_;
};

/// Linear beta schedule from beta_start to beta_end over T steps.
NoiseSchedule make_schedule(int T, double beta_start = 1e-4, double beta_end = 0.02);

/// Evenly strided reverse indices {T, ..., 0} with n_steps transitions:
/// element i is floor((n_steps - i) * T / n_steps).
std::vector<int> strided_timesteps(int T, int n_steps);

}  // namespace dicode::diffusion
