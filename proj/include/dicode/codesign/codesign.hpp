#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dicode/codesign/config.hpp"
#include "dicode/diffusion/denoiser.hpp"
#include "dicode/envs/scenario.hpp"
#include "dicode/guidance/critic.hpp"
#include "dicode/marl/mappo.hpp"
#include "dicode/nn/adam.hpp"

namespace dicode::codesign {

/// FIFO memory of the most recent designs.
class DesignBuffer {
 public:
  explicit DesignBuffer(std::size_t capacity);

  void push(const Vec& theta);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Vec& at(std::size_t i) const { return items_.at(i); }
  const std::deque<Vec>& items() const { return items_; }
  /// Uniform draw of `n` designs (with replacement), one column each.
  Mat sample(std::size_t n, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::deque<Vec> items_;
};

/// Mean team value of the agent critic over m seeded instantiations of
/// each design (columns of `designs`). Uses whatever parameters the critic
/// holds at call time.
Vec distill_targets(const Mat& designs, const envs::Scenario& scenario, const marl::AgentCritic& critic,
                    int m_distill, Rng& rng);

/// Sum over the minibatch of (V(theta) - y)^2 before the step; then one Adam step.
double distill_update(guidance::MlpCritic& env_critic, const Mat& designs, const Vec& targets, nn::Adam& opt);

/// Logged undiscounted episode returns keyed by design hash.
class ReturnsLog {
 public:
  void add(const Vec& theta, double episode_return);
  bool contains(const Vec& theta) const;
  const std::map<std::uint64_t, std::vector<double>>& entries() const { return log_; }
  std::map<std::uint64_t, std::vector<double>>& entries() { return log_; }

 private:
  std::map<std::uint64_t, std::vector<double>> log_;
};

/// Mean logged return per design; throws InvalidArgument for a design with no log.
Vec mc_targets(const Mat& designs, const ReturnsLog& log);

/// Diagonal Gaussian design generator trained with the score-function
/// gradient and a moving-average baseline.
class ReinforceGenerator {
 public:
  ReinforceGenerator(Index dim, double init_log_std, double lr, double baseline_decay);

  /// Raw Gaussian draw (before projection).
  Vec sample(Rng& rng) const;
  /// One ascent step on the mean return of the given draws.
  void update(const std::vector<Vec>& draws, const std::vector<double>& returns);

  const Vec& mean() const { return mean_; }
  const Vec& log_std() const { return log_std_; }
  double baseline() const { return baseline_; }
  nlohmann::json to_json() const;
  void load_json(const nlohmann::json& j);

 private:
  Vec mean_, log_std_;
  double baseline_ = 0.0;
  bool has_baseline_ = false;
  double decay_;
  nn::Adam opt_;
};

enum class Method { Dicode, DicodeDescent, DicodeSampling, DicodeAdd, DicodeMc, Fixed, Dr, Reinforce };

Method method_from_name(const std::string& name);
std::string method_name(Method m);
bool uses_prior(Method m);

struct MetricsRow {
  int iteration = 0;
  long long frames = 0;
  double mean_return = 0.0;
  double distill_loss = 0.0;
  double omega = 0.0;
  std::size_t buffer_size = 0;
  double wall_clock = 0.0;
};

std::string metrics_header();
std::string metrics_line(const MetricsRow& row);
std::vector<MetricsRow> read_metrics(const std::string& path);

struct RunOptions {
  std::string out_dir;  // empty: keep everything in memory
  int workers = 1;
  bool resume = false;
  /// Called after each iteration (for progress output).
  std::function<void(const MetricsRow&)> on_iteration;
};

struct RunResult {
  std::vector<MetricsRow> metrics;
  std::vector<Vec> designs;  // every training design, in order
  std::vector<std::pair<int, double>> eval_guided, eval_uniform;  // (iteration, mean return)
};

/// Loads or trains the diffusion prior for a config.
diffusion::MlpDenoiser pretrain_prior(const ExperimentConfig& cfg, std::uint64_t seed,
                                      std::vector<double>* loss_history = nullptr);

/// Runs one seed of a method. Diffusion-based methods need `prior`.
RunResult run_codesign(const ExperimentConfig& cfg, Method method, std::uint64_t seed,
                       const diffusion::MlpDenoiser* prior, const RunOptions& opts = {});

}  // namespace dicode::codesign
