#pragma once

#include "dicode/envs/scenario.hpp"

namespace dicode::envs {

struct WindCondition {
  double speed = 8.0;      // m/s
  double direction = 0.0;  // radians; the flow travels along (cos, sin)
};

struct WakeModel {
  double rotor_diameter = 1.0;
  double decay = 0.05;
  double thrust_coefficient = 0.75;
  double rated_speed = 10.0;
};

/// Top-hat Jensen wake. Per-turbine power is (U / rated)^3 (1 - deficit)^3
/// cos^3(yaw), with upstream deficits combined as a root sum of squares.
/// `layout` holds (x, y) pairs in rotor diameters; yaw is the offset from
/// the wind direction.
Vec wake_power(const Vec& layout, const Vec& yaws, const WindCondition& wind, const WakeModel& model = {});

/// Deficit cast by an upstream turbine on a point at downstream distance x
/// and lateral offset y (zero outside the wake).
double jensen_deficit(double x, double y, double yaw, const WakeModel& model);

class WindScenario final : public Scenario {
 public:
  static constexpr int kTurbines = 4;
  static constexpr double kMinDistance = 0.4;   // normalized units
  static constexpr double kScale = 5.0;         // rotor diameters per normalized unit
  static constexpr double kYawStep = 5.0 * M_PI / 180.0;
  static constexpr double kMaxYaw = 30.0 * M_PI / 180.0;
  static constexpr double kWeibullShape = 2.0;
  static constexpr double kWeibullScale = 8.0;
  static constexpr int kMaxRejections = 1000;

  explicit WindScenario(int horizon = 32);

  const std::string& id() const override { return id_; }
  Index design_dim() const override { return 2 * kTurbines; }
  int n_agents() const override { return kTurbines; }
  int horizon() const override { return horizon_; }
  int obs_dim() const override { return 12; }
  int state_dim() const override { return 15; }
  int n_actions() const override { return 3; }

  projection::ProjectionPtr projection() const override { return projection_; }
  Validation validate(const Vec& theta) const override;
  Vec uniform_generate(Rng& rng) const override;
  std::unique_ptr<Env> instantiate(const Vec& theta, std::uint64_t seed) const override;

  static WindCondition sample_wind(Rng& rng);

 private:
  std::string id_ = "wind";
  int horizon_;
  projection::ProjectionPtr projection_;
};

class WindEnv final : public Env {
 public:
  WindEnv(Vec design, WindCondition wind, int horizon);

  int n_agents() const override { return WindScenario::kTurbines; }
  int t() const override { return t_; }
  Mat observations() const override;
  Vec global_state() const override;
  Vec potential() const override { return Vec::Zero(WindScenario::kTurbines); }
  /// Actions: 0 yaw down one step, 1 hold, 2 yaw up one step.
  StepResult step(const std::vector<int>& actions) override;
  std::unique_ptr<Env> clone() const override { return std::make_unique<WindEnv>(*this); }

  const WindCondition& wind() const { return wind_; }
  const Vec& yaws() const { return yaws_; }

 private:
  Vec design_;
  WindCondition wind_;
  Vec yaws_;
  int horizon_;
  int t_ = 0;
};

}  // namespace dicode::envs
