#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dicode/core/rng.hpp"
#include "dicode/core/types.hpp"
#include "dicode/diffusion/denoiser.hpp"
#include "dicode/diffusion/schedule.hpp"

namespace dicode::diffusion {

/// A point in the wide diffusion domain; finalized samples are valid designs.
struct DesignSample {
  Vec data;
  std::string scenario_id;
  bool is_finalized = false;
};

/// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps
Vec noisify(const Vec& x0, const Vec& eps, int t, const NoiseSchedule& s);

/// Clean estimate implied by a noise value: (x_t - sqrt(1-abar_t) eps) / sqrt(abar_t).
Vec clean_from_noise(const Vec& x_t, const Vec& eps, int t, const NoiseSchedule& s);

/// Clean estimate from the denoiser's own noise prediction. Rejects t == 0.
Vec predict_clean(const Vec& x_t, int t, const Denoiser& d, const NoiseSchedule& s);

/// Deterministic DDIM transition t -> t_prev driven by eps_hat.
Vec ddim_step(const Vec& x_t, const Vec& eps_hat, int t, int t_prev, const NoiseSchedule& s);

/// Per-sample step indices and noise used by one evaluation of the DDPM loss.
struct DdpmDraw {
  std::vector<int> t;
  Mat eps;
};

DdpmDraw draw_ddpm_noise(Index dim, Index batch, const NoiseSchedule& s, Rng& rng);

/// Mean squared noise-prediction error over a batch (columns are x0 samples).
double ddpm_loss(const Denoiser& d, const Mat& batch, const NoiseSchedule& s, Rng& rng);
double ddpm_loss(const Denoiser& d, const Mat& batch, const NoiseSchedule& s, const DdpmDraw& draw);

/// Deterministic DDIM chain from x_T ~ N(0, I) along strided_timesteps(T, n_steps).
Vec sample_unconditional_chain(const Denoiser& d, const NoiseSchedule& s, int n_steps, Rng& chain_rng);

/// One unfinalized sample. Each chain draws from its own generator forked from `rng`.
DesignSample sample_unconditional(const Denoiser& d, const NoiseSchedule& s, int n_steps, Rng& rng,
                                  std::string scenario_id = {});

/// Batch of chains, one column each; chain j uses the j-th fork of `rng`.
Mat sample_unconditional_batch(const Denoiser& d, const NoiseSchedule& s, int n_steps, Index batch,
                               Rng& rng);

struct PriorTrainingConfig {
  int batch_size = 64;
  double lr = 1e-3;
};

using DesignGenerator = std::function<Vec(Rng&)>;

/// Adam on the DDPM loss over generator minibatches. Returns per-iteration loss.
std::vector<double> train_prior(MlpDenoiser& d, const DesignGenerator& generator, int n_iters,
                                const PriorTrainingConfig& config, const NoiseSchedule& s, Rng& rng);

}  // namespace dicode::diffusion
