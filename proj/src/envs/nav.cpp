#include "dicode/envs/nav.hpp"

#include <algorithm>
#include <cmath>

#include "dicode/core/errors.hpp"

namespace dicode::envs {

NavScenario::NavScenario(int horizon) : horizon_(horizon) {
  if (horizon < 1) throw InvalidArgument("nav: horizon must be >= 1");
  projection_ = std::make_shared<projection::BoxProjection>(Vec::Constant(design_dim(), -1.0),
                                                            Vec::Constant(design_dim(), 1.0));
}

std::array<double, 2> NavScenario::anchor(int obstacle) {
  // Two obstacles per lane, at x = -0.75 and x = +0.75.
  const double x = (obstacle % 2 == 0) ? -0.75 : 0.75;
  const double y = (obstacle < 2) ? kLane : -kLane;
  return {x, y};
}

Vec NavScenario::obstacle_centres(const Vec& theta) {
  Vec c(2 * kObstacles);
  for (int i = 0; i < kObstacles; ++i) {
    const auto a = anchor(i);
    c[2 * i] = a[0] + kLocalHalfWidth * theta[2 * i];
    c[2 * i + 1] = a[1] + kLocalHalfWidth * theta[2 * i + 1];
  }
  return c;
}

Validation NavScenario::validate(const Vec& theta) const {
  Validation v;
  if (theta.size() != design_dim()) {
    v.fail("shape: expected " + std::to_string(design_dim()) + " values, got " + std::to_string(theta.size()));
    return v;
  }
  for (Index k = 0; k < theta.size(); ++k) {
    if (!std::isfinite(theta[k])) v.fail("non-finite value at " + std::to_string(k));
    else if (theta[k] < -1.0 || theta[k] > 1.0)
      v.fail("local boundary: obstacle " + std::to_string(k / 2) + " axis " + std::to_string(k % 2));
  }
  return v;
}

Vec NavScenario::uniform_generate(Rng& rng) const { return rng.uniform_vec(design_dim(), -1.0, 1.0); }

std::unique_ptr<Env> NavScenario::instantiate(const Vec& theta, std::uint64_t seed) const {
  const Validation v = validate(theta);
  if (!v.ok) throw InvalidArgument("nav: invalid design (" + v.violations.front() + ")");
  Rng rng(seed);
  Mat start(2, kAgents);
  for (int a = 0; a < kAgents; ++a) {
    start(0, a) = kStartX + rng.uniform(-kStartJitter, kStartJitter);
    start(1, a) = (a == 0 ? kLane : -kLane) + rng.uniform(-kStartJitter, kStartJitter);
  }
  return std::make_unique<NavEnv>(obstacle_centres(theta), start, horizon_);
}

NavEnv::NavEnv(Vec obstacles, Mat start, int horizon)
    : obstacles_(std::move(obstacles)), pos_(std::move(start)), horizon_(horizon) {
  vel_ = Mat::Zero(2, NavScenario::kAgents);
  goal_.resize(2, NavScenario::kAgents);
  for (int a = 0; a < NavScenario::kAgents; ++a) {
    goal_(0, a) = NavScenario::kGoalX;
    goal_(1, a) = a == 0 ? NavScenario::kLane : -NavScenario::kLane;
  }
}

Mat NavEnv::observations() const {
  constexpr int n = NavScenario::kAgents;
  Mat obs(16, n);
  for (int a = 0; a < n; ++a) {
    const Eigen::Vector2d p = pos_.col(a);
    Index k = 0;
    obs(k++, a) = p.x() / NavScenario::kArenaX;
    obs(k++, a) = p.y() / NavScenario::kArenaY;
    obs(k++, a) = vel_(0, a) * 10.0;
    obs(k++, a) = vel_(1, a) * 10.0;
    obs(k++, a) = (goal_(0, a) - p.x()) / 4.0;
    obs(k++, a) = (goal_(1, a) - p.y()) / 4.0;
    for (int o = 0; o < NavScenario::kObstacles; ++o) {
      obs(k++, a) = (obstacles_[2 * o] - p.x()) / 2.0;
      obs(k++, a) = (obstacles_[2 * o + 1] - p.y()) / 2.0;
    }
    const int other = 1 - a;
    obs(k++, a) = (pos_(0, other) - p.x()) / 2.0;
    obs(k++, a) = (pos_(1, other) - p.y()) / 2.0;
  }
  return obs;
}

Vec NavEnv::global_state() const {
  Vec s(16);
  Index k = 0;
  for (int a = 0; a < NavScenario::kAgents; ++a) {
    s[k++] = pos_(0, a) / NavScenario::kArenaX;
    s[k++] = pos_(1, a) / NavScenario::kArenaY;
    s[k++] = vel_(0, a) * 10.0;
    s[k++] = vel_(1, a) * 10.0;
  }
  for (Index o = 0; o < obstacles_.size(); ++o) s[k++] = obstacles_[o] / 2.0;
  return s;
}

StepResult NavEnv::step(const std::vector<int>& actions) {
  constexpr int n = NavScenario::kAgents;
  if (static_cast<int>(actions.size()) != n) throw InvalidArgument("nav: expected one action per agent");
  StepResult out;
  out.rewards = Vec::Zero(n);
  for (int a = 0; a < n; ++a) {
    if (actions[static_cast<std::size_t>(a)] < 0 || actions[static_cast<std::size_t>(a)] > 4)
      throw InvalidArgument("nav: action out of range");
    Eigen::Vector2d force = Eigen::Vector2d::Zero();
    switch (actions[static_cast<std::size_t>(a)]) {
      case NavScenario::Left: force.x() = -1.0; break;
      case NavScenario::Right: force.x() = 1.0; break;
      case NavScenario::Down: force.y() = -1.0; break;
      case NavScenario::Up: force.y() = 1.0; break;
      default: break;
    }
    const double before = (goal_.col(a) - pos_.col(a)).norm();
    Eigen::Vector2d v = (1.0 - NavScenario::kDamping) * vel_.col(a) + NavScenario::kAccel * force;
    Eigen::Vector2d p = pos_.col(a) + v;

    // Sliding contact: push out to the obstacle surface and drop the inward velocity.
    for (int o = 0; o < NavScenario::kObstacles; ++o) {
      const Eigen::Vector2d c(obstacles_[2 * o], obstacles_[2 * o + 1]);
      const double reach = NavScenario::kObstacleRadius + NavScenario::kAgentRadius;
      Eigen::Vector2d d = p - c;
      const double dist = d.norm();
      if (dist >= reach) continue;
      const Eigen::Vector2d normal = dist > 1e-12 ? Eigen::Vector2d(d / dist) : Eigen::Vector2d(-1.0, 0.0);
      p = c + reach * normal;
      const double vn = v.dot(normal);
      if (vn < 0.0) v -= vn * normal;
    }
    for (int axis = 0; axis < 2; ++axis) {
      const double lim = (axis == 0 ? NavScenario::kArenaX : NavScenario::kArenaY) - NavScenario::kAgentRadius;
      if (p[axis] < -lim || p[axis] > lim) {
        p[axis] = std::clamp(p[axis], -lim, lim);
        v[axis] = 0.0;
      }
    }
    pos_.col(a) = p;
    vel_.col(a) = v;
    out.rewards[a] = before - (goal_.col(a) - p).norm();
  }
  ++t_;
  out.done = t_ >= horizon_;
  return out;
}

}  // namespace dicode::envs
