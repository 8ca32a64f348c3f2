#include <doctest.h>

#include <cmath>

#include "dicode/diffusion/ops.hpp"
#include "dicode/guidance/critic.hpp"
#include "dicode/guidance/sampler.hpp"
#include "dicode/projection/operators.hpp"

using namespace dicode;
using namespace dicode::guidance;
using diffusion::make_schedule;
using diffusion::NoiseSchedule;
using diffusion::PointSetDenoiser;

namespace {
Vec vec(std::initializer_list<double> v) {
  Vec x(static_cast<Index>(v.size()));
  Index i = 0;
  for (double d : v) x[i++] = d;
  return x;
}
LambdaCritic constant_critic(Index dim) {
  return LambdaCritic(dim, [](const Vec&) { return 3.0; }, [dim](const Vec&) { return Vec(Vec::Zero(dim)); });
}
}  // namespace

TEST_CASE("forward guidance degenerate cases") {
  const auto s = make_schedule(1000);
  Rng rng(1);
  diffusion::MlpDenoiser d(3, {16}, 8, rng);
  const Vec x = rng.normal_vec(3);
  QuadraticCritic q(vec({1, 2, 3}));
  CHECK(forward_guidance(x, 500, d, q, 0.0, s) == d.predict(x, 500));
  const auto flat = constant_critic(3);
  CHECK(forward_guidance(x, 500, d, flat, 10.0, s) == d.predict(x, 500));
}

TEST_CASE("guided chains land closer to the critic optimum") {
  // A single-point oracle has a constant clean prediction, so the guidance
  // gradient through it vanishes. Two data points make it depend on x_t.
  const auto s = make_schedule(1000);
  PointSetDenoiser two({vec({-1.0, 0.0}), vec({1.0, 0.0})}, s);
  const Vec c = vec({0.8, 0.0});
  QuadraticCritic q(c);
  projection::BoxProjection box(Vec::Constant(2, -1e9), Vec::Constant(2, 1e9));
  GuidanceConfig plain{.omega = 0.0, .recurrences_k = 1, .backward_steps_m = 0, .n_ddim_steps = 50};
  GuidanceConfig guided = plain;
  guided.omega = 2.0;
  double dist_plain = 0.0, dist_guided = 0.0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng r1(seed), r2(seed);
    dist_plain += (pug_chain(two, q, box, plain, s, r1) - c).norm();
    dist_guided += (pug_chain(two, q, box, guided, s, r2) - c).norm();
  }
  CHECK(dist_guided < dist_plain);

  PointSetDenoiser one({Vec::Zero(2)}, s);
  const Vec x = vec({0.3, -0.4});
  CHECK((forward_guidance(x, 500, one, q, 5.0, s) - one.predict(x, 500)).norm() < 1e-9);
}

TEST_CASE("backward guidance") {
  const auto s = make_schedule(1000);
  Rng rng(2);
  const Vec x = rng.normal_vec(2), eps = rng.normal_vec(2);
  QuadraticCritic q(vec({0.4, -0.2}));
  CHECK(backward_guidance(eps, x, 300, q, 0, 0.01, s) == eps);
  const auto flat = constant_critic(2);
  CHECK(backward_guidance(eps, x, 300, flat, 50, 0.01, s) == eps);
  // With many small steps delta converges to c - x0_bar.
  const Vec out = backward_guidance(eps, x, 300, q, 3000, 0.005, s);
  const double ab = s.alpha_bar(300);
  const Vec x0bar = diffusion::clean_from_noise(x, eps, 300, s);
  const Vec delta = (eps - out) / std::sqrt(ab / (1.0 - ab));
  CHECK((delta - (q.centre() - x0bar)).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("project_noise hand example") {
  const auto s = NoiseSchedule::from_betas({0.36});
  projection::BoxProjection unit(Vec::Zero(1), Vec::Ones(1));
  const Vec x = vec({0.8});
  const Vec eps = vec({(0.8 - 0.8 * 1.5) / 0.6});  // clean prediction 1.5
  CHECK(diffusion::clean_from_noise(x, eps, 1, s)[0] == doctest::Approx(1.5));
  // Clamped clean value 1.0 implies eps = (0.8 - 0.8 * 1.0) / 0.6 = 0.
  CHECK(std::abs(project_noise(eps, x, 1, unit, s)[0]) < 1e-12);
  const Vec inside = vec({(0.8 - 0.8 * 0.5) / 0.6});
  CHECK(project_noise(inside, x, 1, unit, s)[0] == doctest::Approx(inside[0]).epsilon(1e-6));
}

TEST_CASE("recurrence step without re-noise is deterministic") {
  const auto s = NoiseSchedule::from_betas({0.3, 0.0});
  const Vec x = vec({0.2, -0.7}), eps = vec({0.5, 0.1});
  Rng r1(1), r2(99);
  const Vec a = recurrence_step(x, eps, 2, s, r1);
  CHECK(a == recurrence_step(x, eps, 2, s, r2));
  CHECK((a - diffusion::ddim_step(x, eps, 2, 1, s)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("unguided pug_sample equals finalized DDIM") {
  const auto s = make_schedule(1000);
  Rng net_rng(4);
  diffusion::MlpDenoiser d(4, {16}, 8, net_rng);
  projection::BoxProjection wide(Vec::Constant(4, -1e9), Vec::Constant(4, 1e9));
  QuadraticCritic q(Vec::Zero(4));
  GuidanceConfig cfg{.omega = 0.0, .recurrences_k = 1, .backward_steps_m = 0, .n_ddim_steps = 20};
  Rng a(5), b(5);
  const auto guided = pug_sample(d, q, wide, cfg, s, 3, a);
  for (int j = 0; j < 3; ++j) {
    Rng chain(b.next_u64());
    const Vec ref = wide.finalize(diffusion::sample_unconditional_chain(d, s, 20, chain));
    CHECK((guided[static_cast<std::size_t>(j)].data - ref).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(guided[static_cast<std::size_t>(j)].is_finalized);
  }
}

TEST_CASE("add-style sampling without guidance is unguided DDIM") {
  const auto s = make_schedule(1000);
  Rng net_rng(6);
  diffusion::MlpDenoiser d(2, {16}, 8, net_rng);
  NoisyCritic nc(2, {8}, 4, net_rng);
  projection::BoxProjection wide(Vec::Constant(2, -100), Vec::Constant(2, 100));
  GuidanceConfig cfg{.omega = 0.0, .n_ddim_steps = 20};
  Rng a(7), b(7);
  const auto out = add_style_sample(d, nc, wide, cfg, s, 2, a);
  for (int j = 0; j < 2; ++j) {
    Rng chain(b.next_u64());
    const Vec ref = wide.finalize(diffusion::sample_unconditional_chain(d, s, 20, chain));
    CHECK((out[static_cast<std::size_t>(j)].data - ref).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("descent and top-k ablations") {
  projection::BoxProjection box(Vec::Constant(2, -1), Vec::Constant(2, 1));
  const diffusion::DesignGenerator gen = [](Rng& r) { return r.uniform_vec(2, -1, 1); };
  QuadraticCritic q(vec({0.3, -0.6}));
  Rng rng(8);
  const auto best = descent_sample(q, box, gen, 4, 500, 0.05, rng);
  CHECK((best.data - q.centre()).cwiseAbs().maxCoeff() < 1e-3);

  const auto flat = constant_critic(2);
  Rng r1(9), r2(9);
  const auto kept = topk_sample(flat, gen, 10, 4, r1);
  REQUIRE(kept.size() == 4);
  for (int j = 0; j < 4; ++j) CHECK(kept[static_cast<std::size_t>(j)].data == gen(r2));
  Rng r3(10);
  CHECK(topk_sample(q, gen, 7, 7, r3).size() == 7);
  Rng r4(11);
  const auto one = topk_sample(q, gen, 64, 1, r4);
  Rng r5(11);
  double top = -1e9;
  for (int i = 0; i < 64; ++i) top = std::max(top, q.value(gen(r5)));
  CHECK(q.value(one[0].data) == top);
}

TEST_CASE("critic gradients") {
  Rng rng(12);
  std::vector<Vec> xs;
  for (int i = 0; i < 20; ++i) xs.push_back(rng.normal_vec(3));
  CHECK(gradient_check(QuadraticCritic(vec({1, 0, -1})), xs) < 1e-6);
  CHECK(gradient_check(MultimodalCritic(vec({1, 0, -1})), xs) < 1e-4);
  CHECK(gradient_check(MlpCritic(3, {16, 16}, rng), xs) < 1e-3);
  NoisyCritic nc(3, {16}, 4, rng);
  const Vec g = nc.gradient(xs[0], 100);
  for (Index k = 0; k < 3; ++k) {
    Vec p = xs[0], m = xs[0];
    p[k] += 1e-6;
    m[k] -= 1e-6;
    CHECK(g[k] == doctest::Approx((nc.value(p, 100) - nc.value(m, 100)) / 2e-6).epsilon(1e-4));
  }
}

TEST_CASE("guidance config validation and annealing") {
  GuidanceConfig bad{.omega = -1.0};
  CHECK_THROWS(bad.validate());
  GuidanceConfig zero_k{.recurrences_k = 0};
  CHECK_THROWS(zero_k.validate());
  OmegaAnneal an{0.0, 3.0, 10};
  CHECK(an.at(0, 7.0) == 0.0);
  CHECK(an.at(5, 7.0) == doctest::Approx(1.5).epsilon(0.2));
  CHECK(an.at(100, 7.0) == 3.0);
  CHECK(OmegaAnneal{}.at(5, 7.0) == 7.0);
}
