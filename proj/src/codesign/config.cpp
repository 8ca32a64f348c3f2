#include "dicode/codesign/config.hpp"

#include <fstream>
#include <set>

#include "dicode/core/errors.hpp"
#include "dicode/core/hash.hpp"
#include "dicode/envs/scenario.hpp"

namespace dicode::codesign {

namespace {

/// Reads fields of one JSON object, remembering which keys were used so the
/// rest can be rejected.
class Block {
 public:
  Block(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  template <class T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(field(key), "wrong type");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }
  Block sub(const char* key) {
    seen_.insert(key);
    return Block(j_.at(key), field(key));
  }
  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(field(it.key()), "unknown key");
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}

void check_hidden(const std::vector<int>& h, const std::string& field) {
  require(!h.empty(), field, "must list at least one layer");
  for (int w : h) require(w >= 1 && w <= 4096, field, "layer widths must be in [1, 4096]");
}

}  // namespace

nlohmann::json ExperimentConfig::to_json() const {
  const auto& g = guidance.sampler;
  const auto& c = codesign;
  return {
      {"schema_version", schema_version},
      {"scenario", {{"id", scenario.id}, {"horizon", scenario.horizon}}},
      {"diffusion",
       {{"T", diffusion.T},
        {"beta_start", diffusion.beta_start},
        {"beta_end", diffusion.beta_end},
        {"ddim_steps", diffusion.ddim_steps},
        {"pretrain_iters", diffusion.pretrain_iters},
        {"pretrain_batch", diffusion.pretrain_batch},
        {"pretrain_lr", diffusion.pretrain_lr},
        {"hidden", diffusion.hidden},
        {"time_features", diffusion.time_features}}},
      {"guidance",
       {{"omega", g.omega},
        {"recurrences_k", g.recurrences_k},
        {"backward_steps_m", g.backward_steps_m},
        {"backward_lr", g.backward_lr},
        {"anneal", {{"start", guidance.anneal.start}, {"end", guidance.anneal.end}, {"batches", guidance.anneal.batches}}}}},
      {"marl", marl.to_json()},
      {"codesign",
       {{"iterations", c.iterations},
        {"designs_per_iteration", c.designs_per_iteration},
        {"env_repeat", c.env_repeat},
        {"warmup_envs", c.warmup_envs},
        {"buffer_capacity", c.buffer_capacity},
        {"distill_updates", c.distill_updates},
        {"distill_batch", c.distill_batch},
        {"m_distill", c.m_distill},
        {"env_critic_hidden", c.env_critic_hidden},
        {"env_critic_lr", c.env_critic_lr},
        {"eval_every", c.eval_every},
        {"eval_designs", c.eval_designs},
        {"checkpoint_every", c.checkpoint_every},
        {"sampling_pool", c.sampling_pool},
        {"descent", {{"restarts", c.descent.restarts}, {"steps", c.descent.steps}, {"lr", c.descent.lr}}},
        {"reinforce",
         {{"lr", c.reinforce.lr}, {"init_log_std", c.reinforce.init_log_std}, {"baseline_decay", c.reinforce.baseline_decay}}},
        {"add", {{"train_iters", c.add.train_iters}, {"hidden", c.add.hidden}}}}},
      {"seeds", seeds},
      {"output_dir", output_dir}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  Block root(j, "");
  root.read("schema_version", cfg.schema_version);
  require(cfg.schema_version == kSchemaVersion, "schema_version",
          "unsupported version " + std::to_string(cfg.schema_version));

  if (!root.has("scenario")) throw ConfigError("scenario", "missing required block");
  {
    Block b = root.sub("scenario");
    if (!b.has("id")) throw ConfigError("scenario.id", "missing required field");
    b.read("id", cfg.scenario.id);
    b.read("horizon", cfg.scenario.horizon);
    b.finish();
  }
  if (root.has("diffusion")) {
    Block b = root.sub("diffusion");
    auto& d = cfg.diffusion;
    b.read("T", d.T);
    b.read("beta_start", d.beta_start);
    b.read("beta_end", d.beta_end);
    b.read("ddim_steps", d.ddim_steps);
    b.read("pretrain_iters", d.pretrain_iters);
    b.read("pretrain_batch", d.pretrain_batch);
    b.read("pretrain_lr", d.pretrain_lr);
    b.read("hidden", d.hidden);
    b.read("time_features", d.time_features);
    b.finish();
  }
  if (root.has("guidance")) {
    Block b = root.sub("guidance");
    auto& g = cfg.guidance.sampler;
    b.read("omega", g.omega);
    b.read("recurrences_k", g.recurrences_k);
    b.read("backward_steps_m", g.backward_steps_m);
    b.read("backward_lr", g.backward_lr);
    if (b.has("anneal")) {
      Block a = b.sub("anneal");
      a.read("start", cfg.guidance.anneal.start);
      a.read("end", cfg.guidance.anneal.end);
      a.read("batches", cfg.guidance.anneal.batches);
      a.finish();
    }
    b.finish();
  }
  if (root.has("marl")) {
    Block b = root.sub("marl");
    auto& m = cfg.marl;
    b.read("policy_hidden", m.policy_hidden);
    b.read("critic_hidden", m.critic_hidden);
    b.read("policy_lr", m.policy_lr);
    b.read("critic_lr", m.critic_lr);
    b.read("gamma", m.gamma);
    b.read("gae_lambda", m.gae_lambda);
    b.read("clip_ratio", m.clip_ratio);
    b.read("entropy_coef", m.entropy_coef);
    b.read("huber_delta", m.huber_delta);
    b.read("max_grad_norm", m.max_grad_norm);
    b.read("epochs", m.epochs);
    b.read("minibatches", m.minibatches);
    b.read("advantage_norm", m.advantage_norm);
    b.read("critic_norm", m.critic_norm);
    b.read("total_updates", m.total_updates);
    b.finish();
  }
  if (root.has("codesign")) {
    Block b = root.sub("codesign");
    auto& c = cfg.codesign;
    b.read("iterations", c.iterations);
    b.read("designs_per_iteration", c.designs_per_iteration);
    b.read("env_repeat", c.env_repeat);
    b.read("warmup_envs", c.warmup_envs);
    b.read("buffer_capacity", c.buffer_capacity);
    b.read("distill_updates", c.distill_updates);
    b.read("distill_batch", c.distill_batch);
    b.read("m_distill", c.m_distill);
    b.read("env_critic_hidden", c.env_critic_hidden);
    b.read("env_critic_lr", c.env_critic_lr);
    b.read("eval_every", c.eval_every);
    b.read("eval_designs", c.eval_designs);
    b.read("checkpoint_every", c.checkpoint_every);
    b.read("sampling_pool", c.sampling_pool);
    if (b.has("descent")) {
      Block d = b.sub("descent");
      d.read("restarts", c.descent.restarts);
      d.read("steps", c.descent.steps);
      d.read("lr", c.descent.lr);
      d.finish();
    }
    if (b.has("reinforce")) {
      Block r = b.sub("reinforce");
      r.read("lr", c.reinforce.lr);
      r.read("init_log_std", c.reinforce.init_log_std);
      r.read("baseline_decay", c.reinforce.baseline_decay);
      r.finish();
    }
    if (b.has("add")) {
      Block a = b.sub("add");
      a.read("train_iters", c.add.train_iters);
      a.read("hidden", c.add.hidden);
      a.finish();
    }
    b.finish();
  }
  root.read("seeds", cfg.seeds);
  root.read("output_dir", cfg.output_dir);
  root.finish();
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot read " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<file>", std::string("malformed JSON: ") + e.what());
  }
  return from_json(j);
}

void ExperimentConfig::validate() const {
  const auto ids = envs::scenario_ids();
  require(std::find(ids.begin(), ids.end(), scenario.id) != ids.end(), "scenario.id", "unknown scenario '" + scenario.id + "'");
  require(scenario.horizon >= 0 && scenario.horizon <= 100000, "scenario.horizon", "must be in [0, 100000]");

  const auto& d = diffusion;
  require(d.T >= 1 && d.T <= 100000, "diffusion.T", "must be in [1, 100000]");
  require(d.beta_start > 0.0 && d.beta_start < 1.0, "diffusion.beta_start", "must be in (0, 1)");
  require(d.beta_end >= d.beta_start && d.beta_end < 1.0, "diffusion.beta_end", "must be in [beta_start, 1)");
  require(d.ddim_steps >= 1 && d.ddim_steps <= d.T, "diffusion.ddim_steps", "must be in [1, T]");
  require(d.pretrain_iters >= 0, "diffusion.pretrain_iters", "must be >= 0");
  require(d.pretrain_batch >= 1, "diffusion.pretrain_batch", "must be >= 1");
  require(d.pretrain_lr > 0.0, "diffusion.pretrain_lr", "must be positive");
  check_hidden(d.hidden, "diffusion.hidden");
  require(d.time_features >= 2 && d.time_features % 2 == 0, "diffusion.time_features", "must be even and >= 2");

  const auto& g = guidance.sampler;
  require(g.omega >= 0.0, "guidance.omega", "must be >= 0");
  require(g.recurrences_k >= 1, "guidance.recurrences_k", "must be >= 1");
  require(g.backward_steps_m >= 0, "guidance.backward_steps_m", "must be >= 0");
  require(g.backward_lr > 0.0, "guidance.backward_lr", "must be positive");
  require(guidance.anneal.batches >= 0, "guidance.anneal.batches", "must be >= 0");
  require(guidance.anneal.start >= 0.0 && guidance.anneal.end >= 0.0, "guidance.anneal", "weights must be >= 0");

  const auto& m = marl;
  check_hidden(m.policy_hidden, "marl.policy_hidden");
  check_hidden(m.critic_hidden, "marl.critic_hidden");
  require(m.policy_lr >= 0.0, "marl.policy_lr", "must be >= 0");
  require(m.critic_lr >= 0.0, "marl.critic_lr", "must be >= 0");
  require(m.gamma >= 0.0 && m.gamma <= 1.0, "marl.gamma", "must be in [0, 1]");
  require(m.gae_lambda >= 0.0 && m.gae_lambda <= 1.0, "marl.gae_lambda", "must be in [0, 1]");
  require(m.clip_ratio > 0.0 && m.clip_ratio < 1.0, "marl.clip_ratio", "must be in (0, 1)");
  require(m.entropy_coef >= 0.0, "marl.entropy_coef", "must be >= 0");
  require(m.huber_delta > 0.0, "marl.huber_delta", "must be positive");
  require(m.max_grad_norm > 0.0, "marl.max_grad_norm", "must be positive");
  require(m.epochs >= 1, "marl.epochs", "must be >= 1");
  require(m.minibatches >= 1, "marl.minibatches", "must be >= 1");
  require(m.total_updates >= 0, "marl.total_updates", "must be >= 0");

  const auto& c = codesign;
  require(c.iterations >= 0, "codesign.iterations", "must be >= 0");
  require(c.designs_per_iteration >= 1, "codesign.designs_per_iteration", "must be >= 1");
  require(c.env_repeat >= 1, "codesign.env_repeat", "must be >= 1");
  require(c.warmup_envs >= 0, "codesign.warmup_envs", "must be >= 0");
  require(c.buffer_capacity >= 1, "codesign.buffer_capacity", "must be >= 1");
  require(c.distill_updates >= 0, "codesign.distill_updates", "must be >= 0");
  require(c.distill_batch >= 1, "codesign.distill_batch", "must be >= 1");
  require(c.m_distill >= 1, "codesign.m_distill", "must be >= 1");
  check_hidden(c.env_critic_hidden, "codesign.env_critic_hidden");
  require(c.env_critic_lr > 0.0, "codesign.env_critic_lr", "must be positive");
  require(c.eval_every >= 0, "codesign.eval_every", "must be >= 0");
  require(c.eval_designs >= 1, "codesign.eval_designs", "must be >= 1");
  require(c.checkpoint_every >= 0, "codesign.checkpoint_every", "must be >= 0");
  require(c.sampling_pool >= c.designs_per_iteration, "codesign.sampling_pool", "must be >= designs_per_iteration");
  require(c.descent.restarts >= 1, "codesign.descent.restarts", "must be >= 1");
  require(c.descent.steps >= 0, "codesign.descent.steps", "must be >= 0");
  require(c.descent.lr > 0.0, "codesign.descent.lr", "must be positive");
  require(c.reinforce.lr > 0.0, "codesign.reinforce.lr", "must be positive");
  require(c.reinforce.baseline_decay >= 0.0 && c.reinforce.baseline_decay < 1.0, "codesign.reinforce.baseline_decay",
          "must be in [0, 1)");
  require(c.add.train_iters >= 0, "codesign.add.train_iters", "must be >= 0");
  check_hidden(c.add.hidden, "codesign.add.hidden");

  require(!seeds.empty(), "seeds", "must list at least one seed");
  require(!output_dir.empty(), "output_dir", "must not be empty");
}

std::string ExperimentConfig::config_hash() const { return to_hex(fnv1a64(to_json().dump())); }

std::string ExperimentConfig::scenario_hash() const {
  return to_hex(fnv1a64(to_json().at("scenario").dump()));
}

ExperimentConfig default_config(const std::string& scenario_id) {
  ExperimentConfig cfg;
  cfg.scenario.id = scenario_id;
  cfg.output_dir = "runs/" + scenario_id;
  cfg.seeds = {0, 1, 2};
  if (scenario_id == "nav") {
    cfg.guidance.sampler.omega = 50.0;
    cfg.codesign.env_repeat = 1;
  } else if (scenario_id == "warehouse" || scenario_id == "warehouse_coord") {
    cfg.guidance.sampler.omega = 10.0;
    cfg.codesign.env_repeat = 4;
    cfg.codesign.designs_per_iteration = 4;
    cfg.diffusion.hidden = {256, 256};
  } else if (scenario_id == "wind") {
    cfg.guidance.anneal = {0.0, 3.0, 100};
    cfg.marl.advantage_norm = true;
    cfg.marl.critic_norm = true;
  }
  cfg.validate();
  return cfg;
}

}  // namespace dicode::codesign
