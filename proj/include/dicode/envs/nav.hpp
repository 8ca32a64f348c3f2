#pragma once

#include <array>

#include "dicode/envs/scenario.hpp"

namespace dicode::envs {

/// Two point agents crossing the arena in parallel lanes past four round
/// obstacles. The design holds one normalized (dx, dy) offset per obstacle;
/// obstacle i sits at its anchor plus kLocalHalfWidth * offset.
class NavScenario final : public Scenario {
 public:
  static constexpr int kAgents = 2;
  static constexpr int kObstacles = 4;
  static constexpr double kLane = 0.6;
  static constexpr double kObstacleRadius = 0.3;
  static constexpr double kAgentRadius = 0.1;
  static constexpr double kLocalHalfWidth = 0.5;
  static constexpr double kArenaX = 2.5;
  static constexpr double kArenaY = 1.5;
  static constexpr double kStartX = -2.0;
  static constexpr double kGoalX = 2.0;
  static constexpr double kStartJitter = 0.05;
  static constexpr double kDamping = 0.25;
  static constexpr double kAccel = 0.018;
  enum Action { Noop = 0, Left, Right, Down, Up };

  explicit NavScenario(int horizon = 64);

  const std::string& id() const override { return id_; }
  Index design_dim() const override { return 2 * kObstacles; }
  int n_agents() const override { return kAgents; }
  int horizon() const override { return horizon_; }
  int obs_dim() const override { return 16; }
  int state_dim() const override { return 16; }
  int n_actions() const override { return 5; }

  projection::ProjectionPtr projection() const override { return projection_; }
  Validation validate(const Vec& theta) const override;
  Vec uniform_generate(Rng& rng) const override;
  std::unique_ptr<Env> instantiate(const Vec& theta, std::uint64_t seed) const override;

  static std::array<double, 2> anchor(int obstacle);
  /// Obstacle centres (x0, y0, x1, y1, ...) for a design.
  static Vec obstacle_centres(const Vec& theta);

 private:
  std::string id_ = "nav";
  int horizon_;
  projection::ProjectionPtr projection_;
};

class NavEnv final : public Env {
 public:
  NavEnv(Vec obstacles, Mat start, int horizon);

  int n_agents() const override { return NavScenario::kAgents; }
  int t() const override { return t_; }
  Mat observations() const override;
  Vec global_state() const override;
  Vec potential() const override { return Vec::Zero(NavScenario::kAgents); }
  StepResult step(const std::vector<int>& actions) override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<NavEnv>(*this); }

  const Mat& positions() const { return pos_; }  // 2 x agents
  const Mat& velocities() const { return vel_; }
  const Mat& goals() const { return goal_; }
  const Vec& obstacles() const { return obstacles_; }

 private:
  Vec obstacles_;
  Mat pos_, vel_, goal_;
  int horizon_;
  int t_ = 0;
};

}  // namespace dicode::envs
