#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dicode/core/rng.hpp"
#include "dicode/envs/scenario.hpp"
#include "dicode/nn/adam.hpp"
#include "dicode/nn/mlp.hpp"

namespace dicode::marl {

struct MarlConfig {
  std::vector<int> policy_hidden{64, 64};
  std::vector<int> critic_hidden{64, 64};
  double policy_lr = 1e-3;
  double critic_lr = 1e-3;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_ratio = 0.2;
  double entropy_coef = 0.01;
  double huber_delta = 1.0;
  double max_grad_norm = 1.0;
  int epochs = 4;
  int minibatches = 4;
  bool advantage_norm = false;
  bool critic_norm = false;
  int total_updates = 0;  // cosine schedule length; 0 keeps the learning rate constant

  void validate() const;
  nlohmann::json to_json() const;
  static MarlConfig from_json(const nlohmann::json& j);
};

/// Shared categorical policy over per-agent observations.
class Policy {
 public:
  Policy() = default;
  Policy(int obs_dim, int n_actions, const std::vector<int>& hidden, Rng& rng);

  Mat logits(const Mat& obs) const;
  /// Column-wise softmax of logits.
  Mat probabilities(const Mat& obs) const;
  /// Samples one action per column; fills log-probabilities when requested.
  std::vector<int> act(const Mat& obs, Rng& rng, Vec* log_probs = nullptr) const;
  std::vector<int> act_greedy(const Mat& obs) const;

  nn::Mlp& net() { return net_; }
  const nn::Mlp& net() const { return net_; }

 private:
  nn::Mlp net_;
};

/// Per-agent critic on [global state ; agent observation]. Outputs are in
/// normalized units when normalization is on: V = mean + std * net.
class AgentCritic {
 public:
  AgentCritic() = default;
  AgentCritic(int input_dim, const std::vector<int>& hidden, Rng& rng);

  static Mat inputs(const Vec& state, const Mat& obs);
  /// One value per agent (columns of obs).
  Vec values(const Vec& state, const Mat& obs) const;
  Vec values_batch(const Mat& inputs) const;
  /// Team value: sum of per-agent values.
  double team_value(const envs::Env& env) const;

  double mean = 0.0;
  double std = 1.0;

  nn::Mlp& net() { return net_; }
  const nn::Mlp& net() const { return net_; }

 private:
  nn::Mlp net_;
};

/// One episode of one environment.
struct Trajectory {
  Vec design;
  std::uint64_t seed = 0;
  std::vector<Mat> obs;        // per step, obs_dim x agents
  std::vector<Vec> state;      // per step global state
  std::vector<std::vector<int>> actions;
  Mat log_probs;  // steps x agents
  Mat values;     // (steps + 1) x agents; the last row bootstraps a truncated episode
  Mat rewards;    // steps x agents (shaped)
  Vec base_team_reward;        // steps
  std::vector<char> done;      // steps
  Vec initial_potential, final_potential;
  Mat advantages, returns;     // steps x agents, filled by compute_gae

  int steps() const { return static_cast<int>(actions.size()); }
  double team_return() const { return rewards.sum(); }
  double base_team_return() const { return base_team_reward.sum(); }
};

struct RolloutBatch {
  std::vector<Trajectory> trajectories;
  long long frames() const;  // agent-steps
  double mean_team_return() const;
};

struct RolloutOptions {
  int workers = 1;
  bool greedy = false;
  /// When set, every trajectory uses this instantiation seed.
  std::optional<std::uint64_t> fixed_seed;
};

/// Instantiates every design, runs the policy for the scenario horizon (or
/// until done) and records transitions with critic values. The horizon is
/// treated as terminal. Per-trajectory seeds are drawn from rng up front.
RolloutBatch rollout(const envs::Scenario& scenario, const std::vector<Vec>& designs, const Policy& policy,
                     const AgentCritic& critic, Rng& rng, const RolloutOptions& opts = {});

/// Generalized advantage estimation for one reward stream. values has one
/// more entry than rewards; done[t] cuts the bootstrap after step t.
void gae(const Vec& rewards, const Vec& values, const std::vector<char>& done, double gamma, double lam, Vec& advantages,
         Vec& returns);

/// Applies gae to every agent of every trajectory.
void compute_gae(RolloutBatch& batch, double gamma, double lam);

/// d/d(ratio) of min(ratio A, clip(ratio, 1 - eps, 1 + eps) A): A while the
/// sample is unclipped, 0 once it sits at or beyond the clip boundary.
double surrogate_ratio_gradient(double ratio, double advantage, double eps);

struct UpdateReport {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

/// Trainable MAPPO state: networks, optimizers and the update counter.
class Mappo {
 public:
  Mappo(const envs::Scenario& scenario, const MarlConfig& cfg, Rng& rng);

  Policy policy;
  AgentCritic critic;

  /// Clipped-surrogate + Huber critic update over the batch (advantages must
  /// be computed). Throws NumericalError on a non-finite loss.
  UpdateReport update(const RolloutBatch& batch, Rng& rng);

  /// Learning rate multiplier for the next update (cosine, no restarts).
  double lr_scale() const;
  const MarlConfig& config() const { return cfg_; }
  MarlConfig& config() { return cfg_; }
  long long updates() const { return updates_; }

  /// Fits critic normalization from uniform-random-policy returns.
  void fit_critic_normalization(const envs::Scenario& scenario, const std::vector<Vec>& designs, Rng& rng);

  void save(const std::string& path, const std::string& config_hash) const;
  void load(const std::string& path);

 private:
  MarlConfig cfg_;
  nn::Adam policy_opt_, critic_opt_;
  long long updates_ = 0;
};

struct Evaluation {
  std::vector<double> mean_return;  // per design
  std::vector<double> std_error;    // per design
};

/// Mean team return (shaped reward sum) over episodes for each design.
Evaluation evaluate(const envs::Scenario& scenario, const Policy& policy, const std::vector<Vec>& designs,
                    int episodes_per_design, Rng& rng, const RolloutOptions& opts = {});

inline constexpr const char* kMarlMagic = "DICODE-MARL-v1";

}  // namespace dicode::marl
