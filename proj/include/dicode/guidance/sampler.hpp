#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dicode/core/rng.hpp"
#include "dicode/diffusion/denoiser.hpp"
#include "dicode/diffusion/ops.hpp"
#include "dicode/guidance/critic.hpp"
#include "dicode/projection/operators.hpp"

namespace dicode::guidance {

struct GuidanceConfig {
  double omega = 0.0;
  int recurrences_k = 1;
  int backward_steps_m = 0;
  double backward_lr = 0.01;
  int n_ddim_steps = 50;

  void validate() const;
};

/// Linear schedule of omega over sampled environment batches.
struct OmegaAnneal {
  double start = 0.0;
  double end = 0.0;
  int batches = 0;  // 0 disables annealing

  double at(int batch_index, double fixed_omega) const;
};

/// eps_hat = eps(x_t, t) - omega sqrt(1 - abar_t) grad_{x_t} v(P(x0_hat(x_t))).
/// The projection is treated as identity when differentiating (straight-through);
/// `P` may be null.
Vec forward_guidance(const Vec& x_t, int t, const diffusion::Denoiser& d, const EnvCritic& v, double omega,
                     const diffusion::NoiseSchedule& s, const projection::ProjectionOperator* P = nullptr);

/// m Adam steps maximizing v(x0_bar + delta) from delta = 0; returns
/// eps_hat - sqrt(abar / (1 - abar)) delta.
Vec backward_guidance(const Vec& eps_hat, const Vec& x_t, int t, const EnvCritic& v, int m, double lr,
                      const diffusion::NoiseSchedule& s);

/// Noise value whose clean prediction is P(clean(eps)).
Vec project_noise(const Vec& eps, const Vec& x_t, int t, const projection::ProjectionOperator& P,
                  const diffusion::NoiseSchedule& s);

/// Denoise from t to t_prev with eps_bar, then re-noise back to level t.
/// t_prev defaults to t - 1.
Vec recurrence_step(const Vec& x_t, const Vec& eps_bar, int t, const diffusion::NoiseSchedule& s, Rng& rng,
                    int t_prev = -1);

/// Per-chain record for the diagnostics log.
struct ChainDiagnostics {
  std::uint64_t seed = 0;
  int retries = 0;
  std::vector<double> values;  // critic value of the projected clean estimate at each outer step
  bool feasible_before_finalize = false;

  nlohmann::json to_json() const;
};

struct SamplerOptions {
  /// Scenario validation used for the feasibility-before-finalization flag.
  std::function<bool(const Vec&)> is_feasible;
  std::vector<ChainDiagnostics>* diagnostics = nullptr;
  int workers = 1;
};

/// One guided chain (PUG loop); returns the unfinalized
/// terminal state.
Vec pug_chain(const diffusion::Denoiser& d, const EnvCritic& v, const projection::ProjectionOperator& P,
              const GuidanceConfig& cfg, const diffusion::NoiseSchedule& s, Rng& chain_rng,
              std::vector<double>* values = nullptr);

/// `batch` finalized designs. Chain j runs on the j-th seed drawn from `rng`;
/// a chain that produces non-finite values restarts with a derived seed, up
/// to 3 times.
std::vector<diffusion::DesignSample> pug_sample(const diffusion::Denoiser& d, const EnvCritic& v,
                                                const projection::ProjectionOperator& P, const GuidanceConfig& cfg,
                                                const diffusion::NoiseSchedule& s, int batch, Rng& rng,
                                                const SamplerOptions& opts = {});

/// Multi-restart projected gradient ascent from generator draws; the best
/// restart (by critic value) is finalized and returned.
diffusion::DesignSample descent_sample(const EnvCritic& v, const projection::ProjectionOperator& P,
                                       const diffusion::DesignGenerator& generator, int n_restarts, int n_steps,
                                       double lr, Rng& rng);

/// The `keep` highest-valued designs of `pool` generator draws (ties keep draw order).
std::vector<diffusion::DesignSample> topk_sample(const EnvCritic& v, const diffusion::DesignGenerator& generator,
                                                 int pool, int keep, Rng& rng);

/// Classifier-guidance chain: eps - omega sqrt(1 - abar) grad v_noisy(x_t, t)
/// at each DDIM step, finalized once at the end.
std::vector<diffusion::DesignSample> add_style_sample(const diffusion::Denoiser& d, const NoisyCritic& v_noisy,
                                                      const projection::ProjectionOperator& P,
                                                      const GuidanceConfig& cfg, const diffusion::NoiseSchedule& s,
                                                      int batch, Rng& rng, const SamplerOptions& opts = {});

/// Appends one JSON line per chain.
void append_diagnostics(const std::string& path, const std::vector<ChainDiagnostics>& chains,
                        const nlohmann::json& context = {});

}  // namespace dicode::guidance
