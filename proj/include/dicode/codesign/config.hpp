#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "dicode/guidance/sampler.hpp"
#include "dicode/marl/mappo.hpp"

namespace dicode::codesign {

inline constexpr int kSchemaVersion = 1;

struct ScenarioBlock {
  std::string id;
  int horizon = 0;  // 0 keeps the scenario default
};

struct DiffusionBlock {
  int T = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  int ddim_steps = 50;
  int pretrain_iters = 3000;
  int pretrain_batch = 64;
  double pretrain_lr = 1e-3;
  std::vector<int> hidden{128, 128};
  int time_features = 16;
};

struct GuidanceBlock {
  guidance::GuidanceConfig sampler{.omega = 0.0};
  guidance::OmegaAnneal anneal;
};

struct DescentBlock {
  int restarts = 4;
  int steps = 50;
  double lr = 0.05;
};

struct ReinforceBlock {
  double lr = 0.05;
  double init_log_std = -0.5;
  double baseline_decay = 0.9;
};

struct AddBlock {
  int train_iters = 20;
  std::vector<int> hidden{64, 64};
};

struct CodesignBlock {
  int iterations = 200;
  int designs_per_iteration = 16;
  int env_repeat = 1;
  int warmup_envs = 256;
  int buffer_capacity = 2048;
  int distill_updates = 4;
  int distill_batch = 64;
  int m_distill = 3;
  std::vector<int> env_critic_hidden{64, 64};
  double env_critic_lr = 1e-3;
  int eval_every = 10;
  int eval_designs = 16;
  int checkpoint_every = 10;
  int sampling_pool = 1024;
  DescentBlock descent;
  ReinforceBlock reinforce;
  AddBlock add;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  ScenarioBlock scenario;
  DiffusionBlock diffusion;
  GuidanceBlock guidance;
  marl::MarlConfig marl;
  CodesignBlock codesign;
  std::vector<std::uint64_t> seeds{0};
  std::string output_dir = "runs";

  nlohmann::json to_json() const;
  /// Strict parse: unknown keys and out-of-range values raise ConfigError
  /// naming the field; absent optional fields keep their defaults. The
  /// scenario block is required.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::string& path);
  void validate() const;

  /// Hash of the canonical JSON of the whole config / of the scenario block.
  std::string config_hash() const;
  std::string scenario_hash() const;
};

/// Desk-scale defaults for a scenario id.
ExperimentConfig default_config(const std::string& scenario_id);

}  // namespace dicode::codesign
