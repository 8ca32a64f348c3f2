#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "dicode/core/rng.hpp"
#include "dicode/core/types.hpp"
#include "dicode/projection/operators.hpp"

namespace dicode::envs {

/// Result of a design check. `violations` lists every failed rule.
struct Validation {
  bool ok = true;
  std::vector<std::string> violations;

  void fail(std::string what) {
    ok = false;
    violations.push_back(std::move(what));
  }
};

struct StepResult {
  Vec rewards;  // base (unshaped) reward per agent
  bool done = false;
};

/// One live episode. Observations are column-per-agent.
class Env {
 public:
  virtual ~Env() = default;
  virtual int n_agents() const = 0;
  virtual int t() const = 0;
  virtual Mat observations() const = 0;
  virtual Vec global_state() const = 0;
  /// Per-agent shaping potential of the current state (zeros when unshaped).
  virtual Vec potential() const = 0;
  /// Throws InvalidArgument on a malformed joint action.
  virtual StepResult step(const std::vector<int>& actions) = 0;
  virtual std::unique_ptr<Env> clone() const = 0;
};

/// A designable scenario: design space, generator u, instantiation E and the
/// bound projection operator.
class Scenario {
 public:
  virtual ~Scenario() = default;
  virtual const std::string& id() const = 0;
  virtual Index design_dim() const = 0;
  virtual int n_agents() const = 0;
  virtual int horizon() const = 0;
  virtual int obs_dim() const = 0;
  virtual int state_dim() const = 0;
  virtual int n_actions() const = 0;

  virtual projection::ProjectionPtr projection() const = 0;
  virtual Validation validate(const Vec& theta) const = 0;
  virtual Vec uniform_generate(Rng& rng) const = 0;
  /// Throws InvalidArgument for an invalid design. Stochastic parts of s0 come from `seed`.
  virtual std::unique_ptr<Env> instantiate(const Vec& theta, std::uint64_t seed) const = 0;
};

using ScenarioPtr = std::shared_ptr<const Scenario>;

struct ScenarioOptions {
  int horizon = 0;  // 0 keeps the scenario default
};

/// Known ids: "nav", "warehouse", "warehouse_coord", "wind".
ScenarioPtr make_scenario(const std::string& id, const ScenarioOptions& options = {});
std::vector<std::string> scenario_ids();

/// base + phi_next - phi_prev, per agent.
Vec shaped_reward(const Vec& phi_prev, const Vec& phi_next, const Vec& base);

/// Structured text record for a design: one JSON object per line.
std::string serialize_design(const std::string& scenario_id, const Vec& theta, const nlohmann::json& meta = {});
struct DesignRecord {
  std::string scenario_id;
  Vec theta;
  nlohmann::json meta;
};
DesignRecord parse_design(const std::string& line);

}  // namespace dicode::envs
