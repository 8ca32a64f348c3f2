#include "dicode/guidance/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "dicode/core/errors.hpp"
#include "dicode/core/parallel.hpp"
#include "dicode/nn/adam.hpp"

namespace dicode::guidance {

using diffusion::DesignSample;
using diffusion::NoiseSchedule;

namespace {

constexpr int kMaxRetries = 3;

void check_step(int t, const NoiseSchedule& s, const char* who) {
  if (t < 1 || t > s.T()) throw InvalidArgument(std::string(who) + ": t must be in 1..T");
}

void require_finite(const Vec& x, const char* where) {
  if (!x.allFinite()) throw NumericalError(std::string("non-finite state in ") + where);
}

}  // namespace

void GuidanceConfig::validate() const {
  if (!(omega >= 0.0)) throw InvalidArgument("guidance: omega must be >= 0");
  if (recurrences_k < 1) throw InvalidArgument("guidance: recurrences_k must be >= 1");
  if (backward_steps_m < 0) throw InvalidArgument("guidance: backward_steps_m must be >= 0");
  if (!(backward_lr > 0.0)) throw InvalidArgument("guidance: backward_lr must be positive");
  if (n_ddim_steps < 1) throw InvalidArgument("guidance: n_ddim_steps must be >= 1");
}

double OmegaAnneal::at(int batch_index, double fixed_omega) const {
  if (batches <= 0) return fixed_omega;
  if (batch_index <= 0) return start;
  if (batch_index >= batches) return end;
  return start + (end - start) * static_cast<double>(batch_index) / batches;
}

Vec forward_guidance(const Vec& x_t, int t, const diffusion::Denoiser& d, const EnvCritic& v, double omega,
                     const NoiseSchedule& s, const projection::ProjectionOperator* P) {
  check_step(t, s, "forward_guidance");
  const Vec eps = d.predict(x_t, t);
  if (omega == 0.0) return eps;
  const double abar = s.alpha_bar(t);
  const Vec x0 = diffusion::clean_from_noise(x_t, eps, t, s);
  const Vec g = v.gradient(P ? P->project(x0) : x0);
  // d x0 / d x_t = (I - sqrt(1 - abar) d eps / d x_t) / sqrt(abar)
  const Vec grad_xt = (g - std::sqrt(1.0 - abar) * d.input_vjp(x_t, t, g)) / std::sqrt(abar);
  return eps - omega * std::sqrt(1.0 - abar) * grad_xt;
}

Vec backward_guidance(const Vec& eps_hat, const Vec& x_t, int t, const EnvCritic& v, int m, double lr,
                      const NoiseSchedule& s) {
  check_step(t, s, "backward_guidance");
  if (m <= 0) return eps_hat;
  const Vec x0 = diffusion::clean_from_noise(x_t, eps_hat, t, s);
  Vec delta = Vec::Zero(x0.size());
  nn::Adam opt(delta.size(), nn::AdamConfig{.lr = lr});
  for (int i = 0; i < m; ++i) {
    const Vec g = v.gradient(x0 + delta);
    opt.step(delta, -g);
  }
  const double abar = s.alpha_bar(t);
  return eps_hat - std::sqrt(abar / (1.0 - abar)) * delta;
}

Vec project_noise(const Vec& eps, const Vec& x_t, int t, const projection::ProjectionOperator& P,
                  const NoiseSchedule& s) {
  check_step(t, s, "project_noise");
  const double abar = s.alpha_bar(t);
  const Vec projected = P.project(diffusion::clean_from_noise(x_t, eps, t, s));
  return x_t / std::sqrt(1.0 - abar) - (std::sqrt(abar) / std::sqrt(1.0 - abar)) * projected;
}

Vec recurrence_step(const Vec& x_t, const Vec& eps_bar, int t, const NoiseSchedule& s, Rng& rng, int t_prev) {
  check_step(t, s, "recurrence_step");
  if (t_prev < 0) t_prev = t - 1;
  const Vec x_prev = diffusion::ddim_step(x_t, eps_bar, t, t_prev, s);
  const double ratio = s.alpha_bar(t) / s.alpha_bar(t_prev);
  const Vec xi = rng.normal_vec(x_t.size());
  return std::sqrt(ratio) * x_prev + std::sqrt(std::max(0.0, 1.0 - ratio)) * xi;
}

nlohmann::json ChainDiagnostics::to_json() const {
  return {{"seed", seed},
          {"retries", retries},
          {"values", values},
          {"feasible_before_finalize", feasible_before_finalize}};
}

Vec pug_chain(const diffusion::Denoiser& d, const EnvCritic& v, const projection::ProjectionOperator& P,
              const GuidanceConfig& cfg, const NoiseSchedule& s, Rng& chain_rng, std::vector<double>* values) {
  const std::vector<int> steps = diffusion::strided_timesteps(s.T(), cfg.n_ddim_steps);
  Vec x = chain_rng.normal_vec(d.dim());
  for (std::size_t i = 0; i + 1 < steps.size(); ++i) {
    const int t = steps[i], t_prev = steps[i + 1];
    for (int r = 0; r < cfg.recurrences_k; ++r) {
      const Vec eps_hat = forward_guidance(x, t, d, v, cfg.omega, s, &P);
      const Vec eps_bar = backward_guidance(eps_hat, x, t, v, cfg.backward_steps_m, cfg.backward_lr, s);
      const Vec eps_tilde = project_noise(eps_bar, x, t, P, s);
      if (values && r == 0) values->push_back(v.value(diffusion::clean_from_noise(x, eps_tilde, t, s)));
      x = r + 1 < cfg.recurrences_k ? recurrence_step(x, eps_tilde, t, s, chain_rng, t_prev)
                                    : diffusion::ddim_step(x, eps_tilde, t, t_prev, s);
      require_finite(x, "pug_chain");
    }
  }
  return x;
}

namespace {

/// Runs `chain(seed, diag)` for each of `batch` seeds drawn from rng, with
/// retries on numerical failure, and finalizes through P.
std::vector<DesignSample> run_chains(int batch, Rng& rng, const projection::ProjectionOperator& P,
                                     const SamplerOptions& opts,
                                     const std::function<Vec(Rng&, ChainDiagnostics&)>& chain) {
  if (batch < 0) throw InvalidArgument("sampler: negative batch");
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(batch));
  for (auto& seed : seeds) seed = rng.next_u64();
  std::vector<DesignSample> out(seeds.size());
  std::vector<ChainDiagnostics> diags(seeds.size());

  parallel_for(seeds.size(), opts.workers, [&](std::size_t j) {
    ChainDiagnostics& diag = diags[j];
    for (int attempt = 0;; ++attempt) {
      diag = ChainDiagnostics{};
      diag.seed = attempt == 0 ? seeds[j] : mix_seed(seeds[j], static_cast<std::uint64_t>(attempt));
      diag.retries = attempt;
      try {
        Rng chain_rng(diag.seed);
        const Vec x = chain(chain_rng, diag);
        diag.feasible_before_finalize = opts.is_feasible ? opts.is_feasible(x) : false;
        out[j] = DesignSample{P.finalize(x), {}, true};
        return;
      } catch (const NumericalError&) {
        if (attempt >= kMaxRetries) throw;
      }
    }
  });
  if (opts.diagnostics) opts.diagnostics->insert(opts.diagnostics->end(), diags.begin(), diags.end());
  return out;
}

}  // namespace

std::vector<DesignSample> pug_sample(const diffusion::Denoiser& d, const EnvCritic& v,
                                     const projection::ProjectionOperator& P, const GuidanceConfig& cfg,
                                     const NoiseSchedule& s, int batch, Rng& rng, const SamplerOptions& opts) {
  cfg.validate();
  if (P.dim() != d.dim() || v.dim() != d.dim()) throw InvalidArgument("pug_sample: dimension mismatch");
  return run_chains(batch, rng, P, opts, [&](Rng& chain_rng, ChainDiagnostics& diag) {
    return pug_chain(d, v, P, cfg, s, chain_rng, &diag.values);
  });
}

DesignSample descent_sample(const EnvCritic& v, const projection::ProjectionOperator& P,
                            const diffusion::DesignGenerator& generator, int n_restarts, int n_steps, double lr,
                            Rng& rng) {
  if (n_restarts < 1 || n_steps < 0) throw InvalidArgument("descent_sample: need n_restarts >= 1, n_steps >= 0");
  DesignSample best;
  double best_value = -INFINITY;
  for (int r = 0; r < n_restarts; ++r) {
    Vec x = generator(rng);
    for (int i = 0; i < n_steps; ++i) x = P.project(x + lr * v.gradient(x));
    Vec theta = P.finalize(x);
    const double value = v.value(theta);
    if (value > best_value || r == 0) {
      best_value = value;
      best = DesignSample{std::move(theta), {}, true};
    }
  }
  return best;
}

std::vector<DesignSample> topk_sample(const EnvCritic& v, const diffusion::DesignGenerator& generator, int pool,
                                      int keep, Rng& rng) {
  if (!(pool >= keep && keep >= 1)) throw InvalidArgument("topk_sample: need pool >= keep >= 1");
  std::vector<Vec> draws;
  std::vector<double> values;
  for (int i = 0; i < pool; ++i) {
    draws.push_back(generator(rng));
    values.push_back(v.value(draws.back()));
  }
  std::vector<int> order(static_cast<std::size_t>(pool));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return values[a] > values[b]; });
  std::vector<DesignSample> out;
  for (int i = 0; i < keep; ++i) out.push_back(DesignSample{draws[static_cast<std::size_t>(order[i])], {}, true});
  return out;
}

std::vector<DesignSample> add_style_sample(const diffusion::Denoiser& d, const NoisyCritic& v_noisy,
                                           const projection::ProjectionOperator& P, const GuidanceConfig& cfg,
                                           const NoiseSchedule& s, int batch, Rng& rng, const SamplerOptions& opts) {
  cfg.validate();
  if (P.dim() != d.dim() || v_noisy.dim() != d.dim()) throw InvalidArgument("add_style_sample: dimension mismatch");
  const std::vector<int> steps = diffusion::strided_timesteps(s.T(), cfg.n_ddim_steps);
  return run_chains(batch, rng, P, opts, [&](Rng& chain_rng, ChainDiagnostics& diag) {
    Vec x = chain_rng.normal_vec(d.dim());
    for (std::size_t i = 0; i + 1 < steps.size(); ++i) {
      const int t = steps[i];
      Vec eps = d.predict(x, t);
      if (cfg.omega != 0.0) eps -= cfg.omega * std::sqrt(1.0 - s.alpha_bar(t)) * v_noisy.gradient(x, t);
      diag.values.push_back(v_noisy.value(x, t));
      x = diffusion::ddim_step(x, eps, t, steps[i + 1], s);
      require_finite(x, "add_style_sample");
    }
    return x;
  });
}

void append_diagnostics(const std::string& path, const std::vector<ChainDiagnostics>& chains,
                        const nlohmann::json& context) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("append_diagnostics: cannot open " + path);
  for (const auto& c : chains) {
    nlohmann::json j = c.to_json();
    if (!context.is_null()) j["context"] = context;
    out << j.dump() << '\n';
  }
}

}  // namespace dicode::guidance
