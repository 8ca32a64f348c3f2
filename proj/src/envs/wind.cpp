#include "dicode/envs/wind.hpp"

#include <cmath>

#include "dicode/core/errors.hpp"

namespace dicode::envs {

double jensen_deficit(double x, double y, double yaw, const WakeModel& m) {
  if (x <= 0.0) return 0.0;
  const double r0 = 0.5 * m.rotor_diameter;
  const double radius = r0 + m.decay * x;
  if (std::abs(y) > radius) return 0.0;
  const double ct = m.thrust_coefficient * std::cos(yaw) * std::cos(yaw);
  const double spread = r0 / radius;
  return (1.0 - std::sqrt(1.0 - ct)) * spread * spread;
}

Vec wake_power(const Vec& layout, const Vec& yaws, const WindCondition& wind, const WakeModel& m) {
  const Index n = layout.size() / 2;
  if (layout.size() != 2 * n || yaws.size() != n) throw InvalidArgument("wake_power: size mismatch");
  const double ux = std::cos(wind.direction), uy = std::sin(wind.direction);
  const double base = std::pow(wind.speed / m.rated_speed, 3);
  Vec power(n);
  for (Index i = 0; i < n; ++i) {
    double sum_sq = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dx = layout[2 * i] - layout[2 * j], dy = layout[2 * i + 1] - layout[2 * j + 1];
      const double down = dx * ux + dy * uy;
      const double lateral = -dx * uy + dy * ux;
      const double d = jensen_deficit(down, lateral, yaws[j], m);
      sum_sq += d * d;
    }
    const double deficit = std::min(1.0, std::sqrt(sum_sq));
    const double c = std::cos(yaws[i]);
    power[i] = base * std::pow(1.0 - deficit, 3) * c * c * c;
  }
  return power;
}

WindScenario::WindScenario(int horizon) : horizon_(horizon) {
  if (horizon < 1) throw InvalidArgument("wind: horizon must be >= 1");
  projection_ = std::make_shared<projection::MinDistanceProjection>(kTurbines, kMinDistance,
                                                                    projection::Bounds{-1.0, 1.0, -1.0, 1.0});
}

Validation WindScenario::validate(const Vec& theta) const {
  Validation v;
  if (theta.size() != design_dim()) {
    v.fail("shape: expected " + std::to_string(design_dim()) + " values");
    return v;
  }
  for (Index k = 0; k < theta.size(); ++k)
    if (!(theta[k] >= -1.0 && theta[k] <= 1.0)) v.fail("bounds: turbine " + std::to_string(k / 2));
  for (int i = 0; i < kTurbines; ++i)
    for (int j = i + 1; j < kTurbines; ++j) {
      const double dx = theta[2 * j] - theta[2 * i], dy = theta[2 * j + 1] - theta[2 * i + 1];
      if (std::sqrt(dx * dx + dy * dy) < kMinDistance)
        v.fail("min distance: pair (" + std::to_string(i) + ", " + std::to_string(j) + ")");
    }
  return v;
}

Vec WindScenario::uniform_generate(Rng& rng) const {
  for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
    Vec x = rng.uniform_vec(design_dim(), -1.0, 1.0);
    if (validate(x).ok) return x;
  }
  throw std::runtime_error("wind: uniform_generate exceeded the rejection cap");
}

WindCondition WindScenario::sample_wind(Rng& rng) {
  const double u = rng.uniform();
  WindCondition w;
  w.speed = kWeibullScale * std::pow(-std::log1p(-u), 1.0 / kWeibullShape);
  w.direction = rng.uniform(0.0, 2.0 * M_PI);
  return w;
}

std::unique_ptr<Env> WindScenario::instantiate(const Vec& theta, std::uint64_t seed) const {
  const Validation v = validate(theta);
  if (!v.ok) throw InvalidArgument("wind: invalid design (" + v.violations.front() + ")");
  Rng rng(seed);
  return std::make_unique<WindEnv>(theta, sample_wind(rng), horizon_);
}

WindEnv::WindEnv(Vec design, WindCondition wind, int horizon)
    : design_(std::move(design)), wind_(wind), yaws_(Vec::Zero(WindScenario::kTurbines)), horizon_(horizon) {}

Mat WindEnv::observations() const {
  constexpr int n = WindScenario::kTurbines;
  const double ux = std::cos(wind_.direction), uy = std::sin(wind_.direction);
  Mat obs(12, n);
  for (int a = 0; a < n; ++a) {
    Index k = 0;
    obs(k++, a) = design_[2 * a];
    obs(k++, a) = design_[2 * a + 1];
    obs(k++, a) = ux;
    obs(k++, a) = uy;
    obs(k++, a) = wind_.speed / 10.0;
    obs(k++, a) = yaws_[a] / WindScenario::kMaxYaw;
    for (int o = 0; o < n; ++o) {
      if (o == a) continue;
      const double dx = design_[2 * o] - design_[2 * a], dy = design_[2 * o + 1] - design_[2 * a + 1];
      obs(k++, a) = (dx * ux + dy * uy) / 2.0;
      obs(k++, a) = (-dx * uy + dy * ux) / 2.0;
    }
  }
  return obs;
}

Vec WindEnv::global_state() const {
  Vec s(15);
  s.head(8) = design_;
  s[8] = std::cos(wind_.direction);
  s[9] = std::sin(wind_.direction);
  s[10] = wind_.speed / 10.0;
  s.tail(4) = yaws_ / WindScenario::kMaxYaw;
  return s;
}

StepResult WindEnv::step(const std::vector<int>& actions) {
  constexpr int n = WindScenario::kTurbines;
  if (static_cast<int>(actions.size()) != n) throw InvalidArgument("wind: expected one action per turbine");
  for (int a = 0; a < n; ++a) {
    const int act = actions[static_cast<std::size_t>(a)];
    if (act < 0 || act > 2) throw InvalidArgument("wind: action out of range");
    yaws_[a] = std::clamp(yaws_[a] + (act - 1) * WindScenario::kYawStep, -WindScenario::kMaxYaw, WindScenario::kMaxYaw);
  }
  const Vec power = wake_power(design_ * WindScenario::kScale, yaws_, wind_);
  StepResult out;
  out.rewards = Vec::Constant(n, power.mean() / n);
  ++t_;
  out.done = t_ >= horizon_;
  return out;
}

}  // namespace dicode::envs
