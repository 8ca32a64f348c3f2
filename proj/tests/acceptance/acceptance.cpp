// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion numbers...]  (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dicode/analysis/analysis.hpp"
#include "dicode/codesign/codesign.hpp"
#include "dicode/diffusion/ops.hpp"
#include "dicode/envs/warehouse.hpp"
#include "dicode/envs/wind.hpp"
#include "dicode/guidance/sampler.hpp"
#include "dicode/marl/mappo.hpp"
#include "dicode/projection/assignment.hpp"

using namespace dicode;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double x) {
  std::ostringstream os;
  os.precision(4);
  os << x;
  return os.str();
}

// ---------------------------------------------------------------------------
// 1. Diffusion roundtrip

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto s = diffusion::make_schedule(1000);
  Rng rng(101);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vec x0 = rng.uniform_vec(8, -1.0, 1.0);
    const Vec eps = rng.normal_vec(8);
    const int t = static_cast<int>(rng.uniform_int(1, s.T()));
    // The single-point posterior mean is the oracle noise predictor.
    diffusion::PointSetDenoiser oracle({x0}, s);
    const Vec xt = diffusion::noisify(x0, eps, t, s);
    worst = std::max(worst, (diffusion::predict_clean(xt, t, oracle, s) - x0).cwiseAbs().maxCoeff());
  }
  double chain_worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Vec x0 = rng.uniform_vec(8, -1.0, 1.0);
    diffusion::PointSetDenoiser oracle({x0}, s);
    Rng chain(rng.next_u64());
    const Vec x = diffusion::sample_unconditional_chain(oracle, s, 50, chain);
    chain_worst = std::max(chain_worst, (x - x0).cwiseAbs().maxCoeff());
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-6 && chain_worst <= 1e-4 && secs < 60.0,
          "roundtrip max err " + num(worst) + ", DDIM oracle chain max err " + num(chain_worst) + ", " + num(secs) +
              " s"};
}

// ---------------------------------------------------------------------------
// 2. Projection suite

Outcome criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::string> failures;
  Rng rng(202);
  for (const std::string id : {"warehouse", "warehouse_coord", "wind"}) {
    const auto sc = envs::make_scenario(id);
    const auto P = sc->projection();
    int idem = 0, fixed = 0, feas = 0;
    for (int i = 0; i < 1000; ++i) {
      const Vec x = 1.5 * rng.normal_vec(sc->design_dim());
      const Vec p = P->project(x);
      idem += (P->project(p) - p).cwiseAbs().maxCoeff() <= 1e-6 ? 1 : 0;
      const Vec theta = sc->uniform_generate(rng);
      fixed += (P->project(theta) - theta).cwiseAbs().maxCoeff() <= 1e-6 ? 1 : 0;
      feas += sc->validate(P->finalize(x)).ok ? 1 : 0;
    }
    if (idem < 1000 || fixed < 1000 || feas < 1000)
      failures.push_back(id + " idem " + std::to_string(idem) + " fixed " + std::to_string(fixed) + " feasible " +
                         std::to_string(feas));
  }
  int assign_ok = 0;
  for (int trial = 0; trial < 500; ++trial) {
    Mat C(6, 6);
    for (Index i = 0; i < 6; ++i)
      for (Index j = 0; j < 6; ++j) C(i, j) = rng.uniform(0.0, 10.0);
    std::vector<int> perm(6);
    std::iota(perm.begin(), perm.end(), 0);
    double best = INFINITY;
    do best = std::min(best, projection::assignment_cost(C, perm));
    while (std::next_permutation(perm.begin(), perm.end()));
    assign_ok += std::abs(projection::assignment_cost(C, projection::assignment(C)) - best) <= 1e-9 ? 1 : 0;
  }
  if (assign_ok < 500) failures.push_back("assignment " + std::to_string(assign_ok) + "/500");

  const projection::Bounds b{-1.0, 1.0, -1.0, 1.0};
  const double d = envs::WindScenario::kMinDistance;
  int repaired = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    // Mix of spread and clustered layouts, some with coincident points.
    Vec pts = (trial % 2 == 0 ? 0.9 : 0.2) * rng.normal_vec(8);
    if (trial % 10 == 0) pts.segment(2, 2) = pts.head(2);
    const Vec out = projection::finalize_min_distance(pts, d, b, static_cast<std::uint64_t>(trial));
    bool ok = projection::min_pairwise_distance(out) >= d;
    for (Index k = 0; k < out.size(); ++k) ok = ok && out[k] >= -1.0 && out[k] <= 1.0;
    repaired += ok ? 1 : 0;
  }
  if (repaired < 1000) failures.push_back("finalize_min_distance " + std::to_string(repaired) + "/1000");
  const double secs = seconds_since(t0);
  std::string detail = failures.empty() ? "3 operators x 1000 inputs, 500 assignments, 1000 repairs all ok"
                                        : failures.front();
  return {failures.empty() && secs < 120.0, detail + ", " + num(secs) + " s"};
}

// ---------------------------------------------------------------------------
// 3. Guidance reduction and gradients

Outcome criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto sc = envs::make_scenario("nav");
  const auto P = sc->projection();
  const auto s = diffusion::make_schedule(1000);
  Rng rng(303);
  diffusion::MlpDenoiser d(8, {64, 64}, 16, rng);
  diffusion::train_prior(d, [&](Rng& r) { return sc->uniform_generate(r); }, 300, {}, s, rng);
  guidance::QuadraticCritic v(Vec::Constant(8, 0.3));

  // Reference: plain DDIM where every clean estimate is projected.
  guidance::GuidanceConfig cfg{.omega = 0.0, .recurrences_k = 1, .backward_steps_m = 0, .n_ddim_steps = 50};
  double step_err = 0.0;
  for (int chain = 0; chain < 5; ++chain) {
    const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(chain);
    Rng ra(seed);
    std::vector<double> pug_values;
    const Vec pug = guidance::pug_chain(d, v, *P, cfg, s, ra, &pug_values);
    Rng rb(seed);
    const auto steps = diffusion::strided_timesteps(s.T(), 50);
    Vec x = rb.normal_vec(8);
    for (std::size_t i = 0; i + 1 < steps.size(); ++i) {
      const Vec eps = d.predict(x, steps[i]);
      const Vec clean = P->project(diffusion::clean_from_noise(x, eps, steps[i], s));
      step_err = std::max(step_err, std::abs(v.value(clean) - pug_values[i]));
      const double ab = s.alpha_bar(steps[i]), ab_prev = s.alpha_bar(steps[i + 1]);
      const Vec eps_proj = (x - std::sqrt(ab) * clean) / std::sqrt(1.0 - ab);
      x = std::sqrt(ab_prev) * clean + std::sqrt(1.0 - ab_prev) * eps_proj;
    }
    step_err = std::max(step_err, (x - pug).cwiseAbs().maxCoeff());
  }

  // Learned critic against central differences.
  guidance::MlpCritic critic(8, {64, 64}, rng);
  std::vector<Vec> inputs;
  for (int i = 0; i < 100; ++i) inputs.push_back(rng.uniform_vec(8, -1.0, 1.0));
  const double critic_err = guidance::gradient_check(critic, inputs, 1e-5, 1e-6);

  // Guidance gradient through the denoiser: d/dx_t v(x0_hat(x_t)).
  double guided_err = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Vec x = rng.normal_vec(8);
    const int t = static_cast<int>(rng.uniform_int(50, 900));
    const double omega = 1.0, sq = std::sqrt(1.0 - s.alpha_bar(t));
    const Vec g = (d.predict(x, t) - guidance::forward_guidance(x, t, d, critic, omega, s)) / (omega * sq);
    Vec fd(8);
    const double h = 1e-5;
    for (Index k = 0; k < 8; ++k) {
      Vec xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      fd[k] = (critic.value(diffusion::predict_clean(xp, t, d, s)) - critic.value(diffusion::predict_clean(xm, t, d, s))) /
              (2 * h);
    }
    guided_err = std::max(guided_err, (g - fd).norm() / std::max(fd.norm(), 1e-6));
  }
  const double secs = seconds_since(t0);
  return {step_err <= 1e-9 && critic_err <= 1e-3 && guided_err <= 1e-3 && secs < 120.0,
          "reduction max step diff " + num(step_err) + ", critic grad rel err " + num(critic_err) +
              ", guided grad rel err " + num(guided_err) + ", " + num(secs) + " s"};
}

// ---------------------------------------------------------------------------
// 4. Analytic-critic guidance efficacy

Outcome criterion4() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto sc = envs::make_scenario("nav");
  const auto P = sc->projection();
  const auto s = diffusion::make_schedule(1000);
  Rng rng(404);
  diffusion::MlpDenoiser d(8, {128, 128}, 16, rng);
  diffusion::train_prior(d, [&](Rng& r) { return sc->uniform_generate(r); }, 3000, {}, s, rng);
  const diffusion::DesignGenerator gen = [&](Rng& r) { return sc->uniform_generate(r); };
  const guidance::GuidanceConfig cfg{.omega = 100.0, .recurrences_k = 1, .backward_steps_m = 20, .n_ddim_steps = 50};

  bool all = true;
  std::string detail;
  for (int seed = 0; seed < 3; ++seed) {
    Rng r(mix_seed(404, static_cast<std::uint64_t>(seed)));
    const Vec c = r.uniform_vec(8, -0.8, 0.8);
    guidance::QuadraticCritic v(c);
    double pug_dist = 0, pug_val = 0, unc_dist = 0, desc_val = 0, topk_val = 0;
    for (const auto& x : guidance::pug_sample(d, v, *P, cfg, s, 64, r)) {
      pug_dist += (x.data - c).norm() / 64;
      pug_val += v.value(x.data) / 64;
    }
    for (int i = 0; i < 64; ++i)
      unc_dist += (P->finalize(diffusion::sample_unconditional(d, s, 50, r).data) - c).norm() / 64;
    for (int i = 0; i < 64; ++i) desc_val += v.value(guidance::descent_sample(v, *P, gen, 4, 50, 0.05, r).data) / 64;
    for (const auto& x : guidance::topk_sample(v, gen, 1024, 64, r)) topk_val += v.value(x.data) / 64;
    const bool ok = pug_dist <= 0.5 * unc_dist && pug_val >= desc_val && desc_val >= topk_val;
    all = all && ok;
    detail += "seed " + std::to_string(seed) + ": dist " + num(pug_dist) + " vs " + num(unc_dist) + ", values " +
              num(pug_val) + " >= " + num(desc_val) + " >= " + num(topk_val) + (ok ? "; " : " (fail); ");
  }
  const double secs = seconds_since(t0);
  return {all && secs < 600.0, detail + num(secs) + " s"};
}

// ---------------------------------------------------------------------------
// 5. Soft co-design exactness

Outcome criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(505);
  const double res = 1e-3;
  double worst_gap = 0.0, worst_l1 = 0.0, shift_err = 0.0;
  bool monotone = true;
  for (int trial = 0; trial < 5; ++trial) {
    const Vec J = rng.uniform_vec(3, -1.0, 1.0);
    const double omega = rng.uniform(0.5, 5.0);
    const Vec p = analysis::soft_codesign_exact(J, omega);
    const auto grid = analysis::simplex_search(J, omega, res);
    worst_gap = std::max(worst_gap, grid.objective - analysis::brute_force_objective(J, p, omega));
    worst_l1 = std::max(worst_l1, (grid.dist - p).cwiseAbs().sum());
    shift_err = std::max(shift_err, (analysis::soft_codesign_exact((J.array() + 7.5).matrix(), omega) - p)
                                        .cwiseAbs()
                                        .maxCoeff());
    Index best = 0;
    J.maxCoeff(&best);
    double prev = -1.0;
    for (double w : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0}) {
      const double pb = analysis::soft_codesign_exact(J, w)[best];
      monotone = monotone && pb >= prev - 1e-12;
      prev = pb;
    }
  }
  const double secs = seconds_since(t0);
  // The grid optimum cannot beat the exact one; its argmax lies within a few grid cells.
  const bool ok = worst_gap <= 1e-12 && worst_l1 <= 4 * res && shift_err <= 1e-12 && monotone && secs < 60.0;
  return {ok, "grid-minus-exact objective " + num(worst_gap) + ", argmax L1 " + num(worst_l1) + ", shift err " +
                  num(shift_err) + (monotone ? ", monotone in omega" : ", NOT monotone") + ", " + num(secs) + " s"};
}

// ---------------------------------------------------------------------------
// 6. MARL sanity

// One-step bandit: action 2 pays 1, others 0.
class BanditEnv final : public envs::Env {
 public:
  int n_agents() const override { return 1; }
  int t() const override { return t_; }
  Mat observations() const override { return Mat::Ones(1, 1); }
  Vec global_state() const override { return Vec::Ones(1); }
  Vec potential() const override { return Vec::Zero(1); }
  envs::StepResult step(const std::vector<int>& a) override {
    ++t_;
    return {Vec::Constant(1, a[0] == 2 ? 1.0 : 0.0), true};
  }
  std::unique_ptr<envs::Env> clone() const override { return std::make_unique<BanditEnv>(*this); }

 private:
  int t_ = 0;
};

class BanditScenario final : public envs::Scenario {
 public:
  const std::string& id() const override { return id_; }
  Index design_dim() const override { return 1; }
  int n_agents() const override { return 1; }
  int horizon() const override { return 1; }
  int obs_dim() const override { return 1; }
  int state_dim() const override { return 1; }
  int n_actions() const override { return 3; }
  projection::ProjectionPtr projection() const override {
    return std::make_shared<projection::BoxProjection>(Vec::Constant(1, -1.0), Vec::Constant(1, 1.0));
  }
  envs::Validation validate(const Vec&) const override { return {}; }
  Vec uniform_generate(Rng&) const override { return Vec::Zero(1); }
  std::unique_ptr<envs::Env> instantiate(const Vec&, std::uint64_t) const override {
    return std::make_unique<BanditEnv>();
  }

 private:
  std::string id_ = "bandit";
};

Outcome criterion6() {
  const auto t0 = std::chrono::steady_clock::now();
  BanditScenario bandit;
  marl::MarlConfig cfg;
  cfg.policy_lr = 1e-2;
  cfg.critic_lr = 1e-2;
  Rng rng(606);
  marl::Mappo mappo(bandit, cfg, rng);
  const std::vector<Vec> designs(32, Vec::Zero(1));
  for (int u = 0; u < 200; ++u) {
    auto batch = marl::rollout(bandit, designs, mappo.policy, mappo.critic, rng);
    marl::compute_gae(batch, cfg.gamma, cfg.gae_lambda);
    mappo.update(batch, rng);
  }
  const double p_best = mappo.policy.probabilities(Mat::Ones(1, 1))(2, 0);

  // GAE closed forms on random streams.
  double gae_err = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int T = 20;
    const Vec r = rng.normal_vec(T), v = rng.normal_vec(T + 1);
    std::vector<char> done(T, 0);
    done[T - 1] = 1;
    const double g = 0.97;
    Vec adv, ret;
    // lambda = 1: discounted Monte-Carlo return minus the value.
    marl::gae(r, v, done, g, 1.0, adv, ret);
    double G = 0.0;
    for (int t = T - 1; t >= 0; --t) {
      G = r[t] + g * G;
      gae_err = std::max({gae_err, std::abs(ret[t] - G), std::abs(adv[t] - (G - v[t]))});
    }
    // lambda = 0: one-step TD error.
    marl::gae(r, v, done, g, 0.0, adv, ret);
    for (int t = 0; t < T; ++t) {
      const double next = done[static_cast<std::size_t>(t)] ? 0.0 : v[t + 1];
      gae_err = std::max(gae_err, std::abs(adv[t] - (r[t] + g * next - v[t])));
    }
    // General lambda: explicit weighted sum of TD errors.
    const double lam = 0.9;
    marl::gae(r, v, done, g, lam, adv, ret);
    for (int t = 0; t < T; ++t) {
      double a = 0.0, w = 1.0;
      for (int k = t; k < T; ++k) {
        const double next = done[static_cast<std::size_t>(k)] ? 0.0 : v[k + 1];
        a += w * (r[k] + g * next - v[k]);
        w *= g * lam;
      }
      gae_err = std::max(gae_err, std::abs(adv[t] - a));
    }
  }

  // Shaping telescopes over whole episodes.
  const auto wh = envs::make_scenario("warehouse");
  marl::MarlConfig wcfg;
  marl::Mappo wm(*wh, wcfg, rng);
  std::vector<Vec> eps;
  for (int i = 0; i < 100; ++i) eps.push_back(wh->uniform_generate(rng));
  const auto batch = marl::rollout(*wh, eps, wm.policy, wm.critic, rng);
  double shaping_err = 0.0;
  for (const auto& tr : batch.trajectories)
    shaping_err = std::max(shaping_err, std::abs(tr.team_return() - (tr.base_team_return() + tr.final_potential.sum() -
                                                                      tr.initial_potential.sum())));
  const double secs = seconds_since(t0);
  return {p_best >= 0.95 && gae_err <= 1e-12 && shaping_err <= 1e-9 && secs < 180.0,
          "bandit best-arm mass " + num(p_best) + ", GAE closed-form err " + num(gae_err) + ", shaping err " +
              num(shaping_err) + " over 100 episodes, " + num(secs) + " s"};
}

// ---------------------------------------------------------------------------
// 7. Policy-shift distillation

// The global state exposes the first design coordinate, so a linear agent
// critic can be scripted to value one cluster over the other.
class ClusterEnv final : public envs::Env {
 public:
  explicit ClusterEnv(double x) : x_(x) {}
  int n_agents() const override { return 1; }
  int t() const override { return 0; }
  Mat observations() const override { return Mat::Zero(1, 1); }
  Vec global_state() const override { return Vec::Constant(1, x_); }
  Vec potential() const override { return Vec::Zero(1); }
  envs::StepResult step(const std::vector<int>&) override { return {Vec::Zero(1), true}; }
  std::unique_ptr<envs::Env> clone() const override { return std::make_unique<ClusterEnv>(*this); }

 private:
  double x_;
};

class ClusterScenario final : public envs::Scenario {
 public:
  const std::string& id() const override { return id_; }
  Index design_dim() const override { return 2; }
  int n_agents() const override { return 1; }
  int horizon() const override { return 1; }
  int obs_dim() const override { return 1; }
  int state_dim() const override { return 1; }
  int n_actions() const override { return 1; }
  projection::ProjectionPtr projection() const override { return nullptr; }
  envs::Validation validate(const Vec&) const override { return {}; }
  Vec uniform_generate(Rng& rng) const override { return rng.uniform_vec(2, -1.0, 1.0); }
  std::unique_ptr<envs::Env> instantiate(const Vec& theta, std::uint64_t) const override {
    return std::make_unique<ClusterEnv>(theta[0]);
  }

 private:
  std::string id_ = "clusters";
};

Outcome criterion7() {
  const auto t0 = std::chrono::steady_clock::now();
  ClusterScenario sc;
  constexpr int kSwap = 10, kRounds = 30, kPerRound = 8, kCapacity = 128, kUpdates = 4, kBatch = 32;
  bool all = true;
  std::string detail;
  for (int seed = 0; seed < 3; ++seed) {
    Rng rng(mix_seed(707, static_cast<std::uint64_t>(seed)));
    marl::AgentCritic agent(2, {}, rng);
    agent.net().params().setZero();
    guidance::MlpCritic distilled(2, {32, 32}, rng), mc(2, {32, 32}, rng);
    nn::Adam opt_d(distilled.params().size(), nn::AdamConfig{.lr = 1e-2});
    nn::Adam opt_m(mc.params().size(), nn::AdamConfig{.lr = 1e-2});
    codesign::DesignBuffer buffer(kCapacity);
    codesign::ReturnsLog log;
    auto cluster_point = [&](int cluster) {
      Vec x(2);
      x << (cluster == 0 ? 0.5 : -0.5) + 0.1 * rng.normal(), 0.1 * rng.normal();
      return x;
    };
    const Vec probe_a = (Vec(2) << 0.5, 0.0).finished(), probe_b = (Vec(2) << -0.5, 0.0).finished();
    int flip_d = -1, flip_m = -1;
    for (int round = 0; round < kRounds; ++round) {
      // Cluster A (x > 0) is better before the swap, worse after.
      const double sign = round < kSwap ? 1.0 : -1.0;
      agent.net().params()[0] = sign;  // V = sign * x
      for (int i = 0; i < kPerRound; ++i) {
        const Vec x = cluster_point(i % 2);
        buffer.push(x);
        log.add(x, sign * x[0] + 0.05 * rng.normal());
      }
      for (int u = 0; u < kUpdates; ++u) {
        const Mat X = buffer.sample(kBatch, rng);
        codesign::distill_update(distilled, X, codesign::distill_targets(X, sc, agent, 1, rng), opt_d);
        codesign::distill_update(mc, X, codesign::mc_targets(X, log), opt_m);
      }
      if (round >= kSwap) {
        if (flip_d < 0 && distilled.value(probe_b) > distilled.value(probe_a)) flip_d = round - kSwap + 1;
        if (flip_m < 0 && mc.value(probe_b) > mc.value(probe_a)) flip_m = round - kSwap + 1;
      }
    }
    const int lag_m = flip_m < 0 ? kRounds - kSwap + 1 : flip_m;
    const bool ok = flip_d > 0 && flip_d <= 3 && lag_m >= 5;
    all = all && ok;
    detail += "seed " + std::to_string(seed) + ": distilled flips after " + std::to_string(flip_d) +
              " rounds, MC after " + (flip_m < 0 ? std::string(">") + std::to_string(kRounds - kSwap) : std::to_string(flip_m)) +
              (ok ? "; " : " (fail); ");
  }
  const double secs = seconds_since(t0);
  return {all && secs < 300.0, detail + num(secs) + " s"};
}

// ---------------------------------------------------------------------------
// 8. End-to-end nav co-design

Outcome criterion8() {
  const auto cfg = codesign::default_config("nav");
  const auto t_prior = std::chrono::steady_clock::now();
  const auto prior = codesign::pretrain_prior(cfg, cfg.seeds.front());
  const double prior_secs = seconds_since(t_prior);
  std::vector<double> dic, dr, fixed;
  double worst_seed_secs = 0.0;
  for (const std::uint64_t seed : {0ULL, 1ULL, 2ULL}) {
    const auto t0 = std::chrono::steady_clock::now();
    auto final_of = [&](codesign::Method m) {
      const auto res = codesign::run_codesign(cfg, m, seed, codesign::uses_prior(m) ? &prior : nullptr);
      std::vector<double> curve;
      for (const auto& r : res.metrics) curve.push_back(r.mean_return);
      return analysis::ema(curve).back();
    };
    dic.push_back(final_of(codesign::Method::Dicode));
    dr.push_back(final_of(codesign::Method::Dr));
    fixed.push_back(final_of(codesign::Method::Fixed));
    worst_seed_secs = std::max(worst_seed_secs, seconds_since(t0) + prior_secs);
  }
  const double md = analysis::mean(dic), mr = analysis::mean(dr), mf = analysis::mean(fixed);
  const auto cmp = analysis::compare_runs(dic, dr);
  const bool ok = md >= 1.05 * mr && md >= mf && cmp.excludes_zero() && cmp.estimate > 0 && worst_seed_secs <= 1800.0;
  return {ok, "DiCoDe " + num(md) + ", DR " + num(mr) + " (" + num(100.0 * (md / mr - 1.0)) + "% gap, 95% CI [" +
                  num(cmp.ci_low) + ", " + num(cmp.ci_high) + "]), Fixed " + num(mf) + ", slowest seed " +
                  num(worst_seed_secs / 60.0) + " CPU-min"};
}

// ---------------------------------------------------------------------------
// 9. Warehouse structure statistic

Outcome criterion9() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = codesign::default_config("warehouse");
  const auto prior = codesign::pretrain_prior(cfg, 0);
  const auto res = codesign::run_codesign(cfg, codesign::Method::Dicode, 0, &prior);
  const auto sc = envs::make_scenario("warehouse");
  const auto& wh = dynamic_cast<const envs::WarehouseScenarioBase&>(*sc);
  std::vector<double> trained, uniform;
  for (std::size_t i = res.designs.size() - 100; i < res.designs.size(); ++i)
    trained.push_back(envs::shelves_near_matching_goal(wh.layout(res.designs[i])));
  Rng rng(909);
  for (int i = 0; i < 100; ++i) uniform.push_back(envs::shelves_near_matching_goal(wh.layout(sc->uniform_generate(rng))));
  const auto test = analysis::mann_whitney_greater(trained, uniform);
  const double secs = seconds_since(t0);
  return {test.p_value < 0.05 && secs <= 1800.0,
          "shelves within 2 of a same-colour goal: trained " + num(analysis::mean(trained)) + " vs uniform " +
              num(analysis::mean(uniform)) + ", one-sided Mann-Whitney p " + num(test.p_value) + ", " +
              num(secs / 60.0) + " min"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"diffusion roundtrip", criterion1},       {"projection suite", criterion2},
      {"guidance reduction and gradients", criterion3}, {"analytic-critic guidance efficacy", criterion4},
      {"soft co-design exactness", criterion5},  {"MARL sanity", criterion6},
      {"policy-shift distillation", criterion7}, {"end-to-end nav co-design", criterion8},
      {"warehouse structure statistic", criterion9}};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("[%s] criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
