#include "dicode/diffusion/ops.hpp"

#include <cmath>

#include "dicode/core/errors.hpp"
#include "dicode/nn/adam.hpp"

namespace dicode::diffusion {

namespace {

void check_same_shape(const Vec& a, const Vec& b, const char* what) {
  if (a.size() != b.size()) throw InvalidArgument(std::string(what) + ": shape mismatch");
}

}  // namespace

Vec noisify(const Vec& x0, const Vec& eps, int t, const NoiseSchedule& s) {
  check_same_shape(x0, eps, "noisify");
  const double abar = s.alpha_bar(t);
  return std::sqrt(abar) * x0 + std::sqrt(1.0 - abar) * eps;
}

Vec clean_from_noise(const Vec& x_t, const Vec& eps, int t, const NoiseSchedule& s) {
  check_same_shape(x_t, eps, "clean_from_noise");
  if (t < 1) throw InvalidArgument("clean_from_noise: t must be >= 1");
  const double abar = s.alpha_bar(t);
  return (x_t - std::sqrt(1.0 - abar) * eps) / std::sqrt(abar);
}

Vec predict_clean(const Vec& x_t, int t, const Denoiser& d, const NoiseSchedule& s) {
  if (t < 1 || t > s.T()) throw InvalidArgument("predict_clean: t must be in 1..T");
  return clean_from_noise(x_t, d.predict(x_t, t), t, s);
}

Vec ddim_step(const Vec& x_t, const Vec& eps_hat, int t, int t_prev, const NoiseSchedule& s) {
  if (!(0 <= t_prev && t_prev < t && t <= s.T())) throw InvalidArgument("ddim_step: need 0 <= t_prev < t <= T");
  const Vec x0 = clean_from_noise(x_t, eps_hat, t, s);
  const double abar_prev = s.alpha_bar(t_prev);
  return std::sqrt(abar_prev) * x0 + std::sqrt(1.0 - abar_prev) * eps_hat;
}

DdpmDraw draw_ddpm_noise(Index dim, Index batch, const NoiseSchedule& s, Rng& rng) {
  DdpmDraw draw;
  draw.t.resize(static_cast<std::size_t>(batch));
  for (auto& t : draw.t) t = static_cast<int>(rng.uniform_int(1, s.T()));
  draw.eps = rng.normal_mat(dim, batch);
  return draw;
}

double ddpm_loss(const Denoiser& d, const Mat& batch, const NoiseSchedule& s, Rng& rng) {
  if (batch.cols() == 0) throw InvalidArgument("ddpm_loss: empty batch");
  return ddpm_loss(d, batch, s, draw_ddpm_noise(batch.rows(), batch.cols(), s, rng));
}

double ddpm_loss(const Denoiser& d, const Mat& batch, const NoiseSchedule& s, const DdpmDraw& draw) {
  if (batch.cols() == 0) throw InvalidArgument("ddpm_loss: empty batch");
  if (draw.eps.rows() != batch.rows() || draw.eps.cols() != batch.cols() ||
      static_cast<Index>(draw.t.size()) != batch.cols())
    throw InvalidArgument("ddpm_loss: draw does not match batch");
  Mat x_t(batch.rows(), batch.cols());
  for (Index j = 0; j < batch.cols(); ++j)
    x_t.col(j) = noisify(batch.col(j), draw.eps.col(j), draw.t[static_cast<std::size_t>(j)], s);
  const Mat pred = d.predict(x_t, draw.t);
  return (pred - draw.eps).squaredNorm() / static_cast<double>(batch.size());
}

Vec sample_unconditional_chain(const Denoiser& d, const NoiseSchedule& s, int n_steps, Rng& chain_rng) {
  const std::vector<int> steps = strided_timesteps(s.T(), n_steps);
  Vec x = chain_rng.normal_vec(d.dim());
  for (std::size_t i = 0; i + 1 < steps.size(); ++i) {
    const int t = steps[i];
    x = ddim_step(x, d.predict(x, t), t, steps[i + 1], s);
  }
  return x;
}

DesignSample sample_unconditional(const Denoiser& d, const NoiseSchedule& s, int n_steps, Rng& rng,
                                  std::string scenario_id) {
  Rng chain = rng.fork();
  return DesignSample{sample_unconditional_chain(d, s, n_steps, chain), std::move(scenario_id), false};
}

Mat sample_unconditional_batch(const Denoiser& d, const NoiseSchedule& s, int n_steps, Index batch, Rng& rng) {
  Mat out(d.dim(), batch);
  for (Index j = 0; j < batch; ++j) {
    Rng chain = rng.fork();
    out.col(j) = sample_unconditional_chain(d, s, n_steps, chain);
  }
  return out;
}

std::vector<double> train_prior(MlpDenoiser& d, const DesignGenerator& generator, int n_iters,
                                const PriorTrainingConfig& config, const NoiseSchedule& s, Rng& rng) {
  if (config.batch_size < 1) throw InvalidArgument("train_prior: batch_size must be >= 1");
  std::vector<double> history;
  history.reserve(static_cast<std::size_t>(std::max(0, n_iters)));
  nn::Adam opt(d.params().size(), nn::AdamConfig{.lr = config.lr});
  Vec grad;
  Mat batch(d.dim(), config.batch_size);
  for (int it = 0; it < n_iters; ++it) {
    for (Index j = 0; j < batch.cols(); ++j) {
      Vec x0 = generator(rng);
      if (x0.size() != d.dim()) throw InvalidArgument("train_prior: generator produced wrong dimension");
      batch.col(j) = x0;
    }
    const DdpmDraw draw = draw_ddpm_noise(batch.rows(), batch.cols(), s, rng);
    Mat x_t(batch.rows(), batch.cols());
    for (Index j = 0; j < batch.cols(); ++j)
      x_t.col(j) = noisify(batch.col(j), draw.eps.col(j), draw.t[static_cast<std::size_t>(j)], s);
    grad.setZero(d.params().size());
    const double loss = d.mse_and_grad(x_t, draw.t, draw.eps, grad);
    if (!std::isfinite(loss)) throw NumericalError("train_prior: non-finite loss at iteration " + std::to_string(it));
    opt.step(d.params(), grad);
    history.push_back(loss);
  }
  return history;
}

}  // namespace dicode::diffusion
