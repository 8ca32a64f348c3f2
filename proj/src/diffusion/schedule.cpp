#include "dicode/diffusion/schedule.hpp"

#include "dicode/core/errors.hpp"

namespace dicode::diffusion {

NoiseSchedule NoiseSchedule::from_betas(std::vector<double> betas) {
  if (betas.empty()) throw InvalidArgument("NoiseSchedule: T must be >= 1");
  NoiseSchedule s;
  s.alpha_bars_.reserve(betas.size() + 1);
  s.alpha_bars_.push_back(1.0);
  for (double b : betas) {
    if (!(b >= 0.0 && b < 1.0)) throw InvalidArgument("NoiseSchedule: beta outside [0, 1)");
    s.alpha_bars_.push_back(s.alpha_bars_.back() * (1.0 - b));
  }
  s.betas_ = std::move(betas);
  return s;
}

double NoiseSchedule::beta(int t) const {
  if (t < 1 || t > T()) throw InvalidArgument("NoiseSchedule::beta: t outside 1..T");
  return betas_[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t < 0 || t > T()) throw InvalidArgument("NoiseSchedule::alpha_bar: t outside 0..T");
  return alpha_bars_[static_cast<std::size_t>(t)];
}

NoiseSchedule make_schedule(int T, double beta_start, double beta_end) {
  if (T < 1) throw InvalidArgument("make_schedule: T must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
    throw InvalidArgument("make_schedule: need 0 < beta_start <= beta_end < 1");
  std::vector<double> betas(static_cast<std::size_t>(T));
  for (int i = 0; i < T; ++i) {
    const double frac = T == 1 ? 0.0 : static_cast<double>(i) / (T - 1);
    betas[static_cast<std::size_t>(i)] = beta_start + (beta_end - beta_start) * frac;
  }
  NoiseSchedule s = NoiseSchedule::from_betas(std::move(betas));
  s.linear_ = std::make_pair(beta_start, beta_end);
  return s;
}

std::vector<int> strided_timesteps(int T, int n_steps) {
  if (n_steps < 1) throw InvalidArgument("strided_timesteps: n_steps must be >= 1");
  if (n_steps > T) throw InvalidArgument("strided_timesteps: n_steps exceeds T");
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n_steps) + 1);
  for (int i = 0; i <= n_steps; ++i)
    out.push_back(static_cast<int>((static_cast<long long>(n_steps - i) * T) / n_steps));
  return out;
}

}  // namespace dicode::diffusion
