#include <doctest.h>

#include <cstdio>

#include "dicode/envs/scenario.hpp"
#include "dicode/marl/mappo.hpp"

using namespace dicode;
using namespace dicode::marl;

namespace {
Vec vec(std::initializer_list<double> v) {
  Vec x(static_cast<Index>(v.size()));
  Index i = 0;
  for (double d : v) x[i++] = d;
  return x;
}
std::vector<Vec> designs(const envs::Scenario& sc, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vec> out;
  for (int i = 0; i < n; ++i) out.push_back(sc.uniform_generate(rng));
  return out;
}
}  // namespace

TEST_CASE("gae closed forms") {
  const Vec r = vec({1.0, 0.0, 2.0});
  const Vec v = vec({0.5, -0.2, 0.3, 0.7});
  const std::vector<char> open{0, 0, 0};
  Vec adv, ret;
  gae(r, v, open, 0.9, 0.0, adv, ret);
  for (Index t = 0; t < 3; ++t) CHECK(adv[t] == doctest::Approx(r[t] + 0.9 * v[t + 1] - v[t]));
  CHECK((ret - (adv + v.head(3))).cwiseAbs().maxCoeff() < 1e-12);

  gae(r, v, {0, 0, 1}, 1.0, 1.0, adv, ret);
  CHECK(adv[0] == doctest::Approx(3.0 - 0.5));
  CHECK(adv[1] == doctest::Approx(2.0 + 0.2));
  CHECK(adv[2] == doctest::Approx(2.0 - 0.3));

  gae(r, Vec::Zero(4), {0, 0, 1}, 0.99, 0.9, adv, ret);
  const double k = 0.99 * 0.9;
  CHECK(adv[2] == doctest::Approx(2.0));
  CHECK(adv[1] == doctest::Approx(k * 2.0));
  CHECK(adv[0] == doctest::Approx(1.0 + k * k * 2.0));
}

TEST_CASE("clipped surrogate gradient") {
  CHECK(surrogate_ratio_gradient(1.0, 2.0, 0.2) == 2.0);
  CHECK(surrogate_ratio_gradient(1.2, 2.0, 0.2) == 0.0);
  CHECK(surrogate_ratio_gradient(1.5, 2.0, 0.2) == 0.0);
  CHECK(surrogate_ratio_gradient(0.5, 2.0, 0.2) == 2.0);
  CHECK(surrogate_ratio_gradient(0.8, -1.0, 0.2) == 0.0);
  CHECK(surrogate_ratio_gradient(0.9, -1.0, 0.2) == -1.0);
  CHECK(surrogate_ratio_gradient(1.3, -1.0, 0.2) == -1.0);
  CHECK(surrogate_ratio_gradient(1.3, 0.0, 0.2) == 0.0);
}

TEST_CASE("rollout determinism and horizon one") {
  const auto sc = envs::make_scenario("nav", {.horizon = 1});
  MarlConfig cfg;
  Rng init(1);
  Mappo algo(*sc, cfg, init);
  const auto ds = designs(*sc, 3, 2);
  Rng a(3), b(3);
  auto ba = rollout(*sc, ds, algo.policy, algo.critic, a);
  auto bb = rollout(*sc, ds, algo.policy, algo.critic, b);
  REQUIRE(ba.trajectories.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(ba.trajectories[i].steps() == 1);
    CHECK(ba.trajectories[i].actions == bb.trajectories[i].actions);
    CHECK(ba.trajectories[i].rewards == bb.trajectories[i].rewards);
  }
  CHECK(ba.frames() == 3 * 1 * sc->n_agents());
}

TEST_CASE("zero advantages leave the policy unchanged without entropy") {
  const auto sc = envs::make_scenario("nav", {.horizon = 8});
  MarlConfig cfg;
  cfg.entropy_coef = 0.0;
  Rng init(4);
  Mappo algo(*sc, cfg, init);
  Rng rng(5);
  auto batch = rollout(*sc, designs(*sc, 4, 6), algo.policy, algo.critic, rng);
  compute_gae(batch, cfg.gamma, cfg.gae_lambda);
  for (auto& tr : batch.trajectories) tr.advantages.setZero();
  const Vec before = algo.policy.net().params();
  const Vec critic_before = algo.critic.net().params();
  const auto rep = algo.update(batch, rng);
  CHECK(algo.policy.net().params() == before);
  CHECK(algo.critic.net().params() != critic_before);
  CHECK(rep.policy_loss == 0.0);
}

TEST_CASE("evaluation of a deterministic setup has zero spread") {
  const auto sc = envs::make_scenario("wind", {.horizon = 4});
  MarlConfig cfg;
  Rng init(7);
  Mappo algo(*sc, cfg, init);
  RolloutOptions opts;
  opts.greedy = true;
  opts.fixed_seed = 11;
  Rng rng(8);
  const auto ev = evaluate(*sc, algo.policy, designs(*sc, 2, 9), 3, rng, opts);
  REQUIRE(ev.mean_return.size() == 2);
  for (double se : ev.std_error) CHECK(se == 0.0);
  Rng r2(8);
  const auto single = evaluate(*sc, algo.policy, designs(*sc, 2, 9), 1, r2, opts);
  CHECK(single.mean_return == ev.mean_return);
}

TEST_CASE("policy probabilities and checkpoint roundtrip") {
  const auto sc = envs::make_scenario("warehouse", {.horizon = 4});
  MarlConfig cfg;
  Rng init(10);
  Mappo algo(*sc, cfg, init);
  const auto env = sc->instantiate(designs(*sc, 1, 11)[0], 0);
  const Mat p = algo.policy.probabilities(env->observations());
  for (Index j = 0; j < p.cols(); ++j) CHECK(p.col(j).sum() == doctest::Approx(1.0));
  const std::string path = "dicode_test_marl.ckpt";
  algo.save(path, "abc");
  Rng other(99);
  Mappo back(*sc, cfg, other);
  back.load(path);
  CHECK(back.policy.net().params() == algo.policy.net().params());
  CHECK(back.critic.net().params() == algo.critic.net().params());
  CHECK(back.updates() == algo.updates());
  std::remove(path.c_str());

  const MarlConfig rt = MarlConfig::from_json(cfg.to_json());
  CHECK(rt.to_json() == cfg.to_json());
  MarlConfig bad;
  bad.clip_ratio = -1;
  CHECK_THROWS(bad.validate());
}
