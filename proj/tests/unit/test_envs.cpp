#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>

#include "dicode/core/errors.hpp"
#include "dicode/envs/nav.hpp"
#include "dicode/envs/warehouse.hpp"
#include "dicode/envs/wind.hpp"

using namespace dicode;
using namespace dicode::envs;
using P = WarehouseParams;

namespace {
bool has_violation(const Validation& v, const std::string& needle) {
  for (const auto& s : v.violations)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}
}  // namespace

TEST_CASE("every scenario generates valid designs and finalize is idempotent") {
  for (const auto& id : scenario_ids()) {
    CAPTURE(id);
    const auto sc = make_scenario(id);
    Rng rng(1);
    for (int i = 0; i < 50; ++i) {
      const Vec theta = sc->uniform_generate(rng);
      REQUIRE(theta.size() == sc->design_dim());
      REQUIRE(sc->validate(theta).ok);
      CHECK(sc->projection()->project(theta) == theta);
      const Vec noisy = theta + 0.3 * rng.normal_vec(theta.size());
      const Vec fin = sc->projection()->finalize(noisy);
      CHECK(sc->validate(fin).ok);
      const Vec proj = sc->projection()->project(noisy);
      CHECK((sc->projection()->project(proj) - proj).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("instantiation is deterministic in the seed") {
  for (const auto& id : scenario_ids()) {
    const auto sc = make_scenario(id);
    Rng rng(2);
    const Vec theta = sc->uniform_generate(rng);
    const auto a = sc->instantiate(theta, 9), b = sc->instantiate(theta, 9);
    CHECK(a->global_state() == b->global_state());
    CHECK(a->observations() == b->observations());
    CHECK(a->observations().rows() == sc->obs_dim());
    CHECK(a->global_state().size() == sc->state_dim());
  }
}

TEST_CASE("invalid designs are rejected") {
  for (const auto& id : scenario_ids()) {
    const auto sc = make_scenario(id);
    CHECK_THROWS_AS(sc->instantiate(Vec::Constant(sc->design_dim(), 5.0), 0), InvalidArgument);
  }
  CHECK_THROWS(make_scenario("nope"));
}

TEST_CASE("warehouse mask uniformity over cell marginals") {
  WarehouseMaskScenario sc;
  Rng rng(3);
  const int n = 10000;
  std::vector<double> counts(P::kRows * P::kCols, 0.0);
  for (int i = 0; i < n; ++i)
    for (int c : sc.layout(sc.uniform_generate(rng)).cells) counts[static_cast<std::size_t>(c)] += 1;
  const auto goals = P::goal_cells();
  const int free = P::kRows * P::kCols - static_cast<int>(goals.size());
  const double expect = n * double(P::kColours * P::kShelvesPerColour) / free;
  double chi = 0.0;
  for (int c = 0; c < P::kRows * P::kCols; ++c) {
    if (std::find(goals.begin(), goals.end(), c) != goals.end()) {
      CHECK(counts[static_cast<std::size_t>(c)] == 0);
      continue;
    }
    chi += std::pow(counts[static_cast<std::size_t>(c)] - expect, 2) / expect;
  }
  const boost::math::chi_squared dist(free - 1);
  CHECK(boost::math::cdf(boost::math::complement(dist, chi)) > 0.01);
}

TEST_CASE("warehouse layout embedding and validation messages") {
  WarehouseMaskScenario sc;
  ShelfLayout lay;
  for (int i = 0; i < 8; ++i) {
    lay.cells.push_back(P::cell(2 + i / 4, 2 + i % 4));
    lay.colours.push_back(i < 4 ? 0 : 1);
  }
  lay.cells[0] = P::cell(2, 3);
  lay.cells[1] = P::cell(2, 2);
  const Vec theta = sc.encode(lay);
  REQUIRE(sc.validate(theta).ok);
  const auto env = sc.instantiate_layout(sc.layout(theta), 0);
  CHECK(env->shelf_colour(P::cell(2, 3)) == 0);
  CHECK(env->box_at(P::cell(2, 3)) >= 0);

  Vec conflict = theta;
  const int q = P::cell(2, 3);
  conflict[P::kRows * P::kCols + q] = 1.0;  // colour 1 on the same cell
  CHECK(has_violation(sc.validate(conflict), "cell conflict"));
  Vec on_goal = theta;
  on_goal[0] = 1.0;
  CHECK(has_violation(sc.validate(on_goal), "goal"));

  WarehouseCoordScenario coord;
  const Vec ct = coord.encode(lay);
  CHECK(coord.validate(ct).ok);
  Vec dup = ct;
  dup.segment(2, 2) = dup.segment(0, 2);
  CHECK(has_violation(coord.validate(dup), "cell conflict"));
}

TEST_CASE("warehouse wall moves are consumed") {
  ShelfLayout lay{{P::cell(3, 3)}, {0}};
  WarehouseEnv env(lay, {P::cell(0, 1), P::cell(7, 7)}, {0}, 10, 0);
  env.step({WarehouseEnv::Up, WarehouseEnv::Right});
  CHECK(env.agent_cells() == std::vector<int>{P::cell(0, 1), P::cell(7, 7)});
  CHECK(env.t() == 1);
}

TEST_CASE("hand-built delivery episode telescopes the shaping") {
  // Agent 0 stands on a colour-0 shelf holding a requested box next to the
  // colour-0 goal at (0, 0): pick up, step left, deliver.
  ShelfLayout lay{{P::cell(0, 1), P::cell(4, 4)}, {0, 1}};
  WarehouseEnv env(lay, {P::cell(0, 1), P::cell(7, 6)}, {0}, 3, 5);
  Vec phi = env.potential();
  const Vec phi0 = phi;
  double shaped = 0.0, base = 0.0;
  const std::vector<std::vector<int>> script{{WarehouseEnv::Toggle, WarehouseEnv::Noop},
                                             {WarehouseEnv::Left, WarehouseEnv::Noop},
                                             {WarehouseEnv::Toggle, WarehouseEnv::Noop}};
  StepResult res;
  for (const auto& acts : script) {
    res = env.step(acts);
    const Vec next = env.potential();
    shaped += shaped_reward(phi, next, res.rewards).sum();
    base += res.rewards.sum();
    phi = next;
  }
  CHECK(res.done);
  CHECK(base == 1.0);
  CHECK(env.deliveries() == 1);
  CHECK(shaped == doctest::Approx(1.0 + phi.sum() - phi0.sum()));
  CHECK(phi.sum() == doctest::Approx(-P::kEmptyPenalty));
  // A stationary transition contributes nothing.
  const Vec zero = Vec::Zero(2);
  CHECK(shaped_reward(phi, phi, zero) == zero);
}

TEST_CASE("nav statics and local boundaries") {
  NavScenario sc;
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const Vec theta = sc.uniform_generate(rng);
    const Vec centres = NavScenario::obstacle_centres(theta);
    for (int o = 0; o < NavScenario::kObstacles; ++o) {
      const auto a = NavScenario::anchor(o);
      REQUIRE(std::abs(centres[2 * o] - a[0]) <= NavScenario::kLocalHalfWidth + 1e-12);
      REQUIRE(std::abs(centres[2 * o + 1] - a[1]) <= NavScenario::kLocalHalfWidth + 1e-12);
    }
  }
  Vec bad = sc.uniform_generate(rng);
  bad[0] = 1.5;
  CHECK(has_violation(sc.validate(bad), "local boundary"));
  auto env = sc.instantiate(sc.uniform_generate(rng), 1);
  auto* nav = dynamic_cast<NavEnv*>(env.get());
  REQUIRE(nav != nullptr);
  const Mat before = nav->positions();
  nav->step({NavScenario::Noop, NavScenario::Noop});
  CHECK(nav->positions() == before);
  CHECK_THROWS_AS(nav->step({0}), InvalidArgument);
}

TEST_CASE("wake model") {
  WindCondition wind{8.0, 0.0};
  WakeModel m;
  Vec one(2);
  one << 0.0, 0.0;
  const Vec p1 = wake_power(one, Vec::Zero(1), wind, m);
  CHECK(p1[0] == doctest::Approx(std::pow(8.0 / m.rated_speed, 3)));
  // Second turbine one rotor diameter downstream.
  Vec two(4);
  two << 0.0, 0.0, 1.0, 0.0;
  const Vec p2 = wake_power(two, Vec::Zero(2), wind, m);
  const double a = 0.5 * (1.0 - std::sqrt(1.0 - m.thrust_coefficient));
  const double r0 = m.rotor_diameter / 2.0;
  const double deficit = 2.0 * a * std::pow(r0 / (r0 + m.decay * 1.0), 2);
  CHECK(jensen_deficit(1.0, 0.0, 0.0, m) == doctest::Approx(deficit));
  CHECK(p2[0] == doctest::Approx(p1[0]));
  CHECK(p2[1] == doctest::Approx(p1[0] * std::pow(1.0 - deficit, 3)));
  CHECK(jensen_deficit(1.0, 5.0, 0.0, m) == 0.0);
  CHECK(jensen_deficit(-1.0, 0.0, 0.0, m) == 0.0);
}

TEST_CASE("wind validation names the offending pair") {
  WindScenario sc;
  Rng rng(6);
  Vec theta = sc.uniform_generate(rng);
  theta.segment(2, 2) = theta.segment(0, 2);
  theta[2] += 0.99 * WindScenario::kMinDistance;
  if (std::abs(theta[2]) > 1.0) theta[2] -= 2 * 0.99 * WindScenario::kMinDistance;
  const auto v = sc.validate(theta);
  CHECK_FALSE(v.ok);
  CHECK(has_violation(v, "(0, 1)"));
}

TEST_CASE("design records roundtrip") {
  Vec theta(3);
  theta << 0.1, -2.5, 1e-17;
  const auto line = serialize_design("nav", theta, {{"iteration", 4}});
  const auto rec = parse_design(line);
  CHECK(rec.scenario_id == "nav");
  CHECK(rec.theta == theta);
  CHECK(rec.meta.at("iteration") == 4);
}
