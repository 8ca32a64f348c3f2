#include <doctest.h>

#include <filesystem>
#include <set>
#include <stdexcept>

#include "dicode/codesign/codesign.hpp"
#include "dicode/codesign/config.hpp"
#include "dicode/core/errors.hpp"
#include "dicode/core/hash.hpp"
#include "dicode/envs/scenario.hpp"

using namespace dicode;
using namespace dicode::codesign;
namespace fs = std::filesystem;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec x(static_cast<Index>(v.size()));
  Index i = 0;
  for (double d : v) x[i++] = d;
  return x;
}

ExperimentConfig tiny_config() {
  ExperimentConfig cfg = default_config("nav");
  cfg.scenario.horizon = 6;
  cfg.diffusion.T = 100;
  cfg.diffusion.ddim_steps = 5;
  cfg.diffusion.pretrain_iters = 20;
  cfg.diffusion.hidden = {16};
  cfg.codesign.iterations = 4;
  cfg.codesign.designs_per_iteration = 2;
  cfg.codesign.warmup_envs = 2;
  cfg.codesign.buffer_capacity = 16;
  cfg.codesign.distill_batch = 4;
  cfg.codesign.distill_updates = 1;
  cfg.codesign.eval_every = 0;
  cfg.codesign.checkpoint_every = 2;
  cfg.codesign.env_critic_hidden = {8};
  cfg.marl.policy_hidden = {8};
  cfg.marl.critic_hidden = {8};
  cfg.marl.epochs = 1;
  cfg.marl.minibatches = 1;
  return cfg;
}

std::size_t unique_count(const std::vector<Vec>& ds) {
  std::set<std::uint64_t> seen;
  for (const Vec& d : ds) seen.insert(array_hash(d));
  return seen.size();
}

void same_run(const RunResult& a, const RunResult& b) {
  REQUIRE(a.metrics.size() == b.metrics.size());
  for (std::size_t i = 0; i < a.metrics.size(); ++i) {
    CHECK(a.metrics[i].iteration == b.metrics[i].iteration);
    CHECK(a.metrics[i].frames == b.metrics[i].frames);
    CHECK(a.metrics[i].mean_return == b.metrics[i].mean_return);
    CHECK(a.metrics[i].distill_loss == b.metrics[i].distill_loss);
  }
  REQUIRE(a.designs.size() == b.designs.size());
  for (std::size_t i = 0; i < a.designs.size(); ++i) CHECK(a.designs[i] == b.designs[i]);
}

}  // namespace

TEST_CASE("design buffer is FIFO") {
  DesignBuffer buf(2);
  buf.push(vec({1}));
  buf.push(vec({2}));
  buf.push(vec({3}));
  CHECK(buf.size() == 2);
  CHECK(buf.at(0)[0] == 2);
  CHECK(buf.at(1)[0] == 3);
  Rng rng(1);
  const Mat s = buf.sample(10, rng);
  CHECK(s.cols() == 10);
  for (Index j = 0; j < 10; ++j) CHECK((s(0, j) == 2 || s(0, j) == 3));
}

TEST_CASE("distillation targets and update") {
  const auto sc = envs::make_scenario("nav");
  Rng rng(2);
  marl::AgentCritic critic(sc->state_dim() + sc->obs_dim(), {8}, rng);
  Mat designs(sc->design_dim(), 3);
  for (Index j = 0; j < 3; ++j) designs.col(j) = sc->uniform_generate(rng);

  // A constant critic gives the same target everywhere.
  critic.net().params().setZero();
  critic.mean = 0.75;
  Rng r1(3);
  const Vec y = distill_targets(designs, *sc, critic, 3, r1);
  for (Index j = 0; j < 3; ++j) CHECK(y[j] == doctest::Approx(0.75 * sc->n_agents()));

  // Three seeded evaluations averaged by hand.
  marl::AgentCritic live(sc->state_dim() + sc->obs_dim(), {8}, rng);
  Rng r2(4), r3(4);
  const Vec got = distill_targets(designs.leftCols(1), *sc, live, 3, r2);
  double manual = 0.0;
  for (int k = 0; k < 3; ++k) manual += live.team_value(*sc->instantiate(designs.col(0), r3.next_u64()));
  CHECK(got[0] == doctest::Approx(manual / 3.0).epsilon(1e-12));

  guidance::MlpCritic env(sc->design_dim(), {8}, rng);
  nn::Adam opt(env.params().size(), {.lr = 1e-2});
  const Vec exact = env.values(designs);
  const Vec before = env.params();
  CHECK(distill_update(env, designs, exact, opt) == doctest::Approx(0.0).scale(1.0));
  CHECK((env.params() - before).cwiseAbs().maxCoeff() < 1e-9);
  const Vec t = vec({1.0, -2.0, 0.5});
  const double loss = distill_update(env, designs, t, opt);
  CHECK(loss == doctest::Approx((env.values(designs) - t).squaredNorm()).epsilon(0.2));
  env.params().setZero();
  CHECK(distill_update(env, designs, t, opt) == doctest::Approx(t.squaredNorm()));
}

TEST_CASE("monte carlo targets") {
  ReturnsLog log;
  const Vec a = vec({0.1, 0.2}), b = vec({0.3, 0.4});
  log.add(a, 1.0);
  log.add(a, 3.0);
  log.add(b, 5.0);
  Mat ds(2, 2);
  ds.col(0) = a;
  ds.col(1) = b;
  const Vec y = mc_targets(ds, log);
  CHECK(y[0] == 2.0);
  CHECK(y[1] == 5.0);
  Mat missing(2, 1);
  missing.col(0) = vec({9, 9});
  CHECK_THROWS_AS(mc_targets(missing, log), InvalidArgument);
}

TEST_CASE("reinforce generator climbs toward higher returns") {
  ReinforceGenerator gen(2, -0.5, 0.05, 0.9);
  const Vec target = vec({0.5, -0.5});
  Rng rng(5);
  for (int it = 0; it < 300; ++it) {
    std::vector<Vec> draws;
    std::vector<double> rets;
    for (int i = 0; i < 16; ++i) {
      draws.push_back(gen.sample(rng));
      rets.push_back(-(draws.back() - target).squaredNorm());
    }
    gen.update(draws, rets);
  }
  CHECK((gen.mean() - target).norm() < 0.15);
  ReinforceGenerator copy(2, 0.0, 0.1, 0.5);
  copy.load_json(gen.to_json());
  CHECK(copy.mean() == gen.mean());
}

TEST_CASE("method names and metrics lines") {
  for (const char* n : {"dicode", "dicode-descent", "dicode-sampling", "dicode-add", "dicode-mc", "fixed", "dr", "rl"})
    CHECK(method_name(method_from_name(n)) == n);
  CHECK(method_from_name("rl_reinforce") == Method::Reinforce);
  CHECK_THROWS(method_from_name("bogus"));
  CHECK(uses_prior(Method::Dicode));
  CHECK_FALSE(uses_prior(Method::Dr));
  CHECK(metrics_header() == "iteration,frames,mean_return,distill_loss,omega,buffer_size,wall_clock");
}

TEST_CASE("config parsing is strict") {
  const auto cfg = default_config("wind");
  const auto back = ExperimentConfig::from_json(cfg.to_json());
  CHECK(back.config_hash() == cfg.config_hash());
  auto j = cfg.to_json();
  j.erase("scenario");
  try {
    ExperimentConfig::from_json(j);
    FAIL("missing scenario accepted");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("scenario") != std::string::npos);
  }
  auto extra = cfg.to_json();
  extra["codesign"]["surprise"] = 1;
  CHECK_THROWS_AS(ExperimentConfig::from_json(extra), ConfigError);
  auto neg = cfg.to_json();
  neg["codesign"]["designs_per_iteration"] = 0;
  CHECK_THROWS_AS(ExperimentConfig::from_json(neg), ConfigError);
  auto other = cfg;
  other.codesign.iterations += 1;
  CHECK(other.config_hash() != cfg.config_hash());
  CHECK(other.scenario_hash() == cfg.scenario_hash());
}

TEST_CASE("baselines: fixed uses one design, dr replays the generator") {
  auto cfg = tiny_config();
  const auto fixed = run_codesign(cfg, Method::Fixed, 0, nullptr);
  CHECK(fixed.designs.size() == 8);
  CHECK(unique_count(fixed.designs) == 1);
  const auto dr = run_codesign(cfg, Method::Dr, 0, nullptr);
  CHECK(unique_count(dr.designs) == dr.designs.size());
  CHECK(dr.metrics.size() == 4);
  for (const auto& m : dr.metrics) CHECK(m.frames > 0);
  // Every dr design is a valid uniform draw.
  const auto sc = envs::make_scenario("nav");
  for (const Vec& d : dr.designs) CHECK(sc->validate(d).ok);
}

TEST_CASE("runs are deterministic and resume reproduces the uninterrupted run") {
  auto cfg = tiny_config();
  const auto prior = pretrain_prior(cfg, 0);
  const auto a = run_codesign(cfg, Method::Dicode, 3, &prior);
  const auto b = run_codesign(cfg, Method::Dicode, 3, &prior);
  same_run(a, b);
  for (const Vec& d : a.designs) CHECK(envs::make_scenario("nav")->validate(d).ok);

  const fs::path dir = fs::temp_directory_path() / "dicode_test_resume";
  fs::remove_all(dir);
  RunOptions opts;
  opts.out_dir = dir.string();
  opts.on_iteration = [](const MetricsRow& r) {
    if (r.iteration == 2) throw std::runtime_error("interrupted");
  };
  CHECK_THROWS(run_codesign(cfg, Method::Dicode, 3, &prior, opts));
  CHECK(fs::exists(dir / "checkpoints" / "state.json"));
  opts.on_iteration = nullptr;
  opts.resume = true;
  const auto resumed = run_codesign(cfg, Method::Dicode, 3, &prior, opts);
  same_run(a, resumed);
  CHECK(read_metrics((dir / "metrics.csv").string()).size() == 4);
  CHECK(fs::exists(dir / "checkpoints" / "env_critic.json"));

  auto changed = cfg;
  changed.codesign.iterations = 5;
  CHECK_THROWS_AS(run_codesign(changed, Method::Dicode, 3, &prior, opts), InvalidArgument);
  fs::remove_all(dir);
}

TEST_CASE("zero iterations produce no training rows") {
  auto cfg = tiny_config();
  cfg.codesign.iterations = 0;
  const auto prior = pretrain_prior(cfg, 0);
  const auto r = run_codesign(cfg, Method::Dicode, 0, &prior);
  CHECK(r.metrics.empty());
  CHECK(r.designs.empty());
}
