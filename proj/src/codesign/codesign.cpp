#include "dicode/codesign/codesign.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dicode/core/errors.hpp"
#include "dicode/core/hash.hpp"
#include "dicode/diffusion/ops.hpp"
#include "dicode/diffusion/schedule.hpp"
#include "dicode/guidance/sampler.hpp"
#include "dicode/nn/json_util.hpp"

namespace dicode::codesign {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Buffer and targets

DesignBuffer::DesignBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw InvalidArgument("DesignBuffer: capacity must be positive");
}

void DesignBuffer::push(const Vec& theta) {
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(theta);
}

Mat DesignBuffer::sample(std::size_t n, Rng& rng) const {
  if (items_.empty()) throw InvalidArgument("DesignBuffer: sampling from an empty buffer");
  Mat out(items_.front().size(), static_cast<Index>(n));
  for (std::size_t j = 0; j < n; ++j)
    out.col(static_cast<Index>(j)) =
        items_[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(items_.size()) - 1))];
  return out;
}

Vec distill_targets(const Mat& designs, const envs::Scenario& scenario, const marl::AgentCritic& critic,
                    int m_distill, Rng& rng) {
  if (m_distill < 1) throw InvalidArgument("distill_targets: m_distill must be >= 1");
  Vec y(designs.cols());
  for (Index j = 0; j < designs.cols(); ++j) {
    double total = 0.0;
    for (int k = 0; k < m_distill; ++k) {
      const auto env = scenario.instantiate(designs.col(j), rng.next_u64());
      total += critic.team_value(*env);
    }
    y[j] = total / m_distill;
  }
  return y;
}

double distill_update(guidance::MlpCritic& env_critic, const Mat& designs, const Vec& targets, nn::Adam& opt) {
  if (designs.cols() == 0) throw InvalidArgument("distill_update: empty minibatch");
  Vec grad;
  const double loss = env_critic.sse_and_grad(designs, targets, grad);
  if (!std::isfinite(loss)) throw NumericalError("distill_update: non-finite loss");
  opt.step(env_critic.params(), grad);
  return loss;
}

void ReturnsLog::add(const Vec& theta, double episode_return) { log_[array_hash(theta)].push_back(episode_return); }

bool ReturnsLog::contains(const Vec& theta) const { return log_.count(array_hash(theta)) > 0; }

Vec mc_targets(const Mat& designs, const ReturnsLog& log) {
  Vec y(designs.cols());
  for (Index j = 0; j < designs.cols(); ++j) {
    const auto it = log.entries().find(array_hash(designs.col(j)));
    if (it == log.entries().end() || it->second.empty())
      throw InvalidArgument("mc_targets: design " + std::to_string(j) + " has no logged returns");
    double s = 0.0;
    for (double r : it->second) s += r;
    y[j] = s / static_cast<double>(it->second.size());
  }
  return y;
}

// ---------------------------------------------------------------------------
// REINFORCE generator

ReinforceGenerator::ReinforceGenerator(Index dim, double init_log_std, double lr, double baseline_decay)
    : mean_(Vec::Zero(dim)), log_std_(Vec::Constant(dim, init_log_std)), decay_(baseline_decay),
      opt_(2 * dim, nn::AdamConfig{.lr = lr}) {}

Vec ReinforceGenerator::sample(Rng& rng) const {
  return mean_ + (log_std_.array().exp() * rng.normal_vec(mean_.size()).array()).matrix();
}

void ReinforceGenerator::update(const std::vector<Vec>& draws, const std::vector<double>& returns) {
  if (draws.empty() || draws.size() != returns.size()) throw InvalidArgument("ReinforceGenerator: bad update batch");
  double batch_mean = 0.0;
  for (double r : returns) batch_mean += r;
  batch_mean /= static_cast<double>(returns.size());
  if (!has_baseline_) {
    baseline_ = batch_mean;
    has_baseline_ = true;
  }
  const Index d = mean_.size();
  Vec grad = Vec::Zero(2 * d);  // ascent direction on (mean, log_std)
  const Eigen::ArrayXd inv_var = (-2.0 * log_std_.array()).exp();
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const double adv = returns[i] - baseline_;
    const Eigen::ArrayXd diff = (draws[i] - mean_).array();
    grad.head(d) += (adv * diff * inv_var).matrix();
    grad.tail(d) += (adv * (diff.square() * inv_var - 1.0)).matrix();
  }
  grad /= static_cast<double>(draws.size());
  Vec params(2 * d);
  params << mean_, log_std_;
  opt_.step(params, -grad);
  mean_ = params.head(d);
  log_std_ = params.tail(d).cwiseMax(-5.0).cwiseMin(2.0);
  baseline_ = decay_ * baseline_ + (1.0 - decay_) * batch_mean;
}

nlohmann::json ReinforceGenerator::to_json() const {
  return {{"mean", nn::vec_to_json(mean_)}, {"log_std", nn::vec_to_json(log_std_)}, {"baseline", baseline_},
          {"has_baseline", has_baseline_}, {"opt", opt_.state()}};
}

void ReinforceGenerator::load_json(const nlohmann::json& j) {
  mean_ = nn::vec_from_json(j.at("mean"));
  log_std_ = nn::vec_from_json(j.at("log_std"));
  baseline_ = j.at("baseline").get<double>();
  has_baseline_ = j.at("has_baseline").get<bool>();
  opt_.load_state(j.at("opt"));
}

// ---------------------------------------------------------------------------
// Methods and metrics

Method method_from_name(const std::string& name) {
  if (name == "dicode") return Method::Dicode;
  if (name == "dicode-descent") return Method::DicodeDescent;
  if (name == "dicode-sampling") return Method::DicodeSampling;
  if (name == "dicode-add") return Method::DicodeAdd;
  if (name == "dicode-mc") return Method::DicodeMc;
  if (name == "fixed") return Method::Fixed;
  if (name == "dr") return Method::Dr;
  if (name == "rl" || name == "rl_reinforce") return Method::Reinforce;
  throw InvalidArgument("unknown method '" + name + "'");
}

std::string method_name(Method m) {
  switch (m) {
    case Method::Dicode: return "dicode";
    case Method::DicodeDescent: return "dicode-descent";
    case Method::DicodeSampling: return "dicode-sampling";
    case Method::DicodeAdd: return "dicode-add";
    case Method::DicodeMc: return "dicode-mc";
    case Method::Fixed: return "fixed";
    case Method::Dr: return "dr";
    case Method::Reinforce: return "rl";
  }
  return "?";
}

bool uses_prior(Method m) { return m == Method::Dicode || m == Method::DicodeAdd || m == Method::DicodeMc; }

namespace {

bool uses_env_critic(Method m) {
  return m == Method::Dicode || m == Method::DicodeDescent || m == Method::DicodeSampling || m == Method::DicodeAdd ||
         m == Method::DicodeMc;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace

std::string metrics_header() { return "iteration,frames,mean_return,distill_loss,omega,buffer_size,wall_clock"; }

std::string metrics_line(const MetricsRow& r) {
  return std::to_string(r.iteration) + "," + std::to_string(r.frames) + "," + fmt(r.mean_return) + "," +
         fmt(r.distill_loss) + "," + fmt(r.omega) + "," + std::to_string(r.buffer_size) + "," + fmt(r.wall_clock);
}

std::vector<MetricsRow> read_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  std::getline(in, line);
  if (line != metrics_header()) throw InvalidArgument("unexpected metrics header in " + path);
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(is, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw InvalidArgument("malformed metrics row in " + path);
    MetricsRow r;
    r.iteration = std::stoi(cells[0]);
    r.frames = std::stoll(cells[1]);
    r.mean_return = std::stod(cells[2]);
    r.distill_loss = std::stod(cells[3]);
    r.omega = std::stod(cells[4]);
    r.buffer_size = static_cast<std::size_t>(std::stoull(cells[5]));
    r.wall_clock = std::stod(cells[6]);
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Training loop

diffusion::MlpDenoiser pretrain_prior(const ExperimentConfig& cfg, std::uint64_t seed,
                                      std::vector<double>* loss_history) {
  const auto scenario = envs::make_scenario(cfg.scenario.id, {cfg.scenario.horizon});
  const auto schedule = diffusion::make_schedule(cfg.diffusion.T, cfg.diffusion.beta_start, cfg.diffusion.beta_end);
  Rng rng(mix_seed(seed, 100));
  diffusion::MlpDenoiser d(scenario->design_dim(), cfg.diffusion.hidden, cfg.diffusion.time_features, rng);
  const auto history = diffusion::train_prior(
      d, [&](Rng& r) { return scenario->uniform_generate(r); }, cfg.diffusion.pretrain_iters,
      diffusion::PriorTrainingConfig{cfg.diffusion.pretrain_batch, cfg.diffusion.pretrain_lr}, schedule, rng);
  if (loss_history) *loss_history = history;
  return d;
}

namespace {

struct LoopState {
  int iteration = 0;
  long long frames = 0;
  int envs_sampled = 0;
  int guided_batches = 0;
  double wall_offset = 0.0;
};

void write_lines(const fs::path& path, const std::vector<std::string>& lines, bool append) {
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
}

}  // namespace

RunResult run_codesign(const ExperimentConfig& cfg, Method method, std::uint64_t seed,
                       const diffusion::MlpDenoiser* prior, const RunOptions& opts) {
  cfg.validate();
  if (uses_prior(method) && !prior) throw InvalidArgument(method_name(method) + " needs a pretrained prior");
  const auto scenario = envs::make_scenario(cfg.scenario.id, {cfg.scenario.horizon});
  const auto schedule = diffusion::make_schedule(cfg.diffusion.T, cfg.diffusion.beta_start, cfg.diffusion.beta_end);
  const auto P = scenario->projection();
  const auto& cd = cfg.codesign;
  const int B = cd.designs_per_iteration;
  const auto start_time = std::chrono::steady_clock::now();

  Rng rng_init(mix_seed(seed, 1)), rng_design(mix_seed(seed, 2)), rng_rollout(mix_seed(seed, 3)),
      rng_update(mix_seed(seed, 4)), rng_distill(mix_seed(seed, 5)), rng_eval(mix_seed(seed, 6));

  marl::MarlConfig mcfg = cfg.marl;
  if (mcfg.total_updates == 0) mcfg.total_updates = cd.iterations;
  marl::Mappo mappo(*scenario, mcfg, rng_init);
  guidance::MlpCritic env_critic(scenario->design_dim(), cd.env_critic_hidden, rng_init);
  nn::Adam env_opt(env_critic.params().size(), nn::AdamConfig{.lr = cd.env_critic_lr});
  guidance::NoisyCritic noisy(scenario->design_dim(), cd.add.hidden, cfg.diffusion.time_features, rng_init);
  DesignBuffer buffer(static_cast<std::size_t>(cd.buffer_capacity));
  ReturnsLog returns_log;
  ReinforceGenerator generator(scenario->design_dim(), cd.reinforce.init_log_std, cd.reinforce.lr,
                               cd.reinforce.baseline_decay);
  const Vec fixed_design = scenario->uniform_generate(rng_init);
  if (mcfg.critic_norm) {
    std::vector<Vec> probe;
    for (int i = 0; i < 16; ++i) probe.push_back(scenario->uniform_generate(rng_init));
    mappo.fit_critic_normalization(*scenario, probe, rng_init);
  }

  RunResult result;
  LoopState st;

  const bool persist = !opts.out_dir.empty();
  const fs::path out(opts.out_dir);
  const fs::path ckpt_dir = out / "checkpoints";
  if (persist) fs::create_directories(ckpt_dir);

  auto save_state = [&]() {
    if (!persist) return;
    mappo.save((ckpt_dir / "marl.ckpt").string(), cfg.config_hash());
    nlohmann::json j;
    j["iteration"] = st.iteration;
    j["frames"] = st.frames;
    j["envs_sampled"] = st.envs_sampled;
    j["guided_batches"] = st.guided_batches;
    j["wall_clock"] = st.wall_offset + std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
    j["rng"] = {rng_init.serialize(), rng_design.serialize(), rng_rollout.serialize(),
                rng_update.serialize(), rng_distill.serialize(), rng_eval.serialize()};
    j["env_critic"] = env_critic.to_json();
    j["env_opt"] = env_opt.state();
    j["noisy_critic"] = noisy.to_json();
    j["generator"] = generator.to_json();
    nlohmann::json buf = nlohmann::json::array();
    for (const Vec& v : buffer.items()) buf.push_back(nn::vec_to_json(v));
    j["buffer"] = buf;
    nlohmann::json log = nlohmann::json::object();
    for (const auto& [k, v] : returns_log.entries()) log[std::to_string(k)] = v;
    j["returns_log"] = log;
    j["config_hash"] = cfg.config_hash();
    j["method"] = method_name(method);
    j["seed"] = seed;
    const fs::path tmp = ckpt_dir / "state.json.tmp";
    write_lines(tmp, {j.dump()}, false);
    fs::rename(tmp, ckpt_dir / "state.json");
  };

  if (persist && opts.resume && fs::exists(ckpt_dir / "state.json")) {
    std::ifstream in(ckpt_dir / "state.json");
    nlohmann::json j = nlohmann::json::parse(in);
    if (j.at("config_hash").get<std::string>() != cfg.config_hash())
      throw InvalidArgument("resume: checkpoint was written with a different config");
    if (j.at("method").get<std::string>() != method_name(method) || j.at("seed").get<std::uint64_t>() != seed)
      throw InvalidArgument("resume: checkpoint belongs to another method or seed");
    mappo.load((ckpt_dir / "marl.ckpt").string());
    st.iteration = j.at("iteration");
    st.frames = j.at("frames");
    st.envs_sampled = j.at("envs_sampled");
    st.guided_batches = j.at("guided_batches");
    st.wall_offset = j.at("wall_clock");
    Rng* rngs[] = {&rng_init, &rng_design, &rng_rollout, &rng_update, &rng_distill, &rng_eval};
    for (int i = 0; i < 6; ++i) rngs[i]->deserialize(j.at("rng").at(static_cast<std::size_t>(i)).get<std::string>());
    env_critic = guidance::MlpCritic::from_json(j.at("env_critic"));
    env_opt.load_state(j.at("env_opt"));
    noisy.load_json(j.at("noisy_critic"));
    generator.load_json(j.at("generator"));
    for (const auto& v : j.at("buffer")) buffer.push(nn::vec_from_json(v));
    for (auto it = j.at("returns_log").begin(); it != j.at("returns_log").end(); ++it)
      returns_log.entries()[std::stoull(it.key())] = it.value().get<std::vector<double>>();
    // Drop output rows written after the checkpoint.
    if (fs::exists(out / "metrics.csv"))
      for (const auto& r : read_metrics((out / "metrics.csv").string()))
        if (r.iteration < st.iteration) result.metrics.push_back(r);
    std::ifstream din(out / "designs.jsonl");
    std::string line;
    while (std::getline(din, line))
      if (!line.empty()) {
        const auto rec = envs::parse_design(line);
        if (rec.meta.at("iteration").get<int>() < st.iteration) result.designs.push_back(rec.theta);
      }
  }
  if (persist) {
    std::vector<std::string> lines{metrics_header()};
    for (const auto& r : result.metrics) lines.push_back(metrics_line(r));
    write_lines(out / "metrics.csv", lines, false);
    std::vector<std::string> dl;
    for (std::size_t i = 0; i < result.designs.size(); ++i)
      dl.push_back(envs::serialize_design(scenario->id(), result.designs[i],
                                          {{"iteration", static_cast<int>(i) / B}, {"method", method_name(method)}}));
    write_lines(out / "designs.jsonl", dl, false);
    if (!opts.resume) write_lines(out / "guidance.jsonl", {}, false);
    if (!opts.resume) write_lines(out / "eval.csv", {"iteration,guided_return,uniform_return"}, false);
  }

  auto uniform_batch = [&](int n, Rng& rng) {
    std::vector<Vec> v;
    for (int i = 0; i < n; ++i) v.push_back(scenario->uniform_generate(rng));
    return v;
  };
  const diffusion::DesignGenerator uniform_gen = [&](Rng& r) { return scenario->uniform_generate(r); };
  auto is_feasible = [&](const Vec& x) { return scenario->validate(x).ok; };

  // Designs from the method's generator (guided methods skip guidance during warmup).
  auto sample_designs = [&](int n, Rng& rng, double omega, bool warm,
                            std::vector<guidance::ChainDiagnostics>* diags) -> std::vector<Vec> {
    std::vector<Vec> designs;
    auto take = [&](const std::vector<diffusion::DesignSample>& s) {
      for (const auto& d : s) designs.push_back(d.data);
    };
    guidance::GuidanceConfig g = cfg.guidance.sampler;
    g.omega = omega;
    g.n_ddim_steps = cfg.diffusion.ddim_steps;
    guidance::SamplerOptions so;
    so.is_feasible = is_feasible;
    so.diagnostics = diags;
    so.workers = opts.workers;
    switch (method) {
      case Method::Fixed: return std::vector<Vec>(static_cast<std::size_t>(n), fixed_design);
      case Method::Dr: return uniform_batch(n, rng);
      case Method::Reinforce:
        for (int i = 0; i < n; ++i) designs.push_back(P->finalize(generator.sample(rng)));
        return designs;
      default: break;
    }
    if (warm) return uniform_batch(n, rng);
    switch (method) {
      case Method::Dicode:
      case Method::DicodeMc: take(guidance::pug_sample(*prior, env_critic, *P, g, schedule, n, rng, so)); break;
      case Method::DicodeAdd: take(guidance::add_style_sample(*prior, noisy, *P, g, schedule, n, rng, so)); break;
      case Method::DicodeDescent:
        for (int i = 0; i < n; ++i)
          designs.push_back(
              guidance::descent_sample(env_critic, *P, uniform_gen, cd.descent.restarts, cd.descent.steps, cd.descent.lr, rng)
                  .data);
        break;
      case Method::DicodeSampling:
        take(guidance::topk_sample(env_critic, uniform_gen, std::max(cd.sampling_pool, n), n, rng));
        break;
      default: break;
    }
    return designs;
  };

  for (; st.iteration < cd.iterations; ++st.iteration) {
    const int it = st.iteration;
    try {
      const bool warm = uses_env_critic(method) && st.envs_sampled < cd.warmup_envs;
      const double omega = cfg.guidance.anneal.at(st.guided_batches, cfg.guidance.sampler.omega);
      std::vector<guidance::ChainDiagnostics> diags;
      std::vector<Vec> designs;
      std::vector<Vec> raw_draws;
      if (method == Method::Reinforce) {
        for (int i = 0; i < B; ++i) {
          raw_draws.push_back(generator.sample(rng_design));
          designs.push_back(P->finalize(raw_draws.back()));
        }
      } else {
        designs = sample_designs(B, rng_design, omega, warm, &diags);
      }
      for (const Vec& d : designs)
        if (!scenario->validate(d).ok) throw ProjectionError("generated design failed validation");
      st.envs_sampled += B;
      if (uses_env_critic(method) && !warm) ++st.guided_batches;
      if (uses_env_critic(method))
        for (const Vec& d : designs) buffer.push(d);

      // Rollouts and the agent update.
      std::vector<Vec> episodes;
      for (const Vec& d : designs)
        for (int r = 0; r < cd.env_repeat; ++r) episodes.push_back(d);
      marl::RolloutOptions ro;
      ro.workers = opts.workers;
      marl::RolloutBatch batch = marl::rollout(*scenario, episodes, mappo.policy, mappo.critic, rng_rollout, ro);
      const long long expected = static_cast<long long>(B) * cd.env_repeat * scenario->horizon() * scenario->n_agents();
      if (batch.frames() != expected)
        throw std::runtime_error("frame accounting mismatch: " + std::to_string(batch.frames()) + " vs " +
                                 std::to_string(expected));
      st.frames += batch.frames();
      for (const auto& tr : batch.trajectories) returns_log.add(tr.design, tr.team_return());
      marl::compute_gae(batch, mcfg.gamma, mcfg.gae_lambda);
      mappo.update(batch, rng_update);

      if (method == Method::Reinforce) {
        std::vector<double> per_design(designs.size(), 0.0);
        for (std::size_t i = 0; i < batch.trajectories.size(); ++i)
          per_design[i / static_cast<std::size_t>(cd.env_repeat)] += batch.trajectories[i].team_return() / cd.env_repeat;
        generator.update(raw_draws, per_design);
      }

      // Environment critic distillation with fresh targets on every minibatch.
      double distill_loss = 0.0;
      if (uses_env_critic(method) && buffer.size() > 0 && cd.distill_updates > 0) {
        for (int u = 0; u < cd.distill_updates; ++u) {
          const Mat X = buffer.sample(static_cast<std::size_t>(cd.distill_batch), rng_distill);
          const Vec y = method == Method::DicodeMc ? mc_targets(X, returns_log)
                                                  : distill_targets(X, *scenario, mappo.critic, cd.m_distill, rng_distill);
          distill_loss += distill_update(env_critic, X, y, env_opt) / static_cast<double>(X.cols());
          if (method == Method::DicodeAdd && cd.add.train_iters > 0)
            noisy.train(X, y, schedule, cd.add.train_iters, std::min(64, cd.distill_batch), cd.env_critic_lr, rng_distill);
        }
        distill_loss /= cd.distill_updates;
      }

      MetricsRow row;
      row.iteration = it;
      row.frames = st.frames;
      row.mean_return = batch.mean_team_return();
      row.distill_loss = distill_loss;
      row.omega = uses_env_critic(method) && !warm ? omega : 0.0;
      row.buffer_size = buffer.size();
      row.wall_clock =
          st.wall_offset + std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
      result.metrics.push_back(row);
      for (const Vec& d : designs) result.designs.push_back(d);

      if (cd.eval_every > 0 && (it + 1) % cd.eval_every == 0) {
        const auto guided = sample_designs(cd.eval_designs, rng_eval, omega, false, nullptr);
        const auto uniform = uniform_batch(cd.eval_designs, rng_eval);
        marl::RolloutOptions eo;
        eo.workers = opts.workers;
        const auto eg = marl::evaluate(*scenario, mappo.policy, guided, 1, rng_eval, eo);
        const auto eu = marl::evaluate(*scenario, mappo.policy, uniform, 1, rng_eval, eo);
        double mg = 0.0, mu = 0.0;
        for (double v : eg.mean_return) mg += v / static_cast<double>(eg.mean_return.size());
        for (double v : eu.mean_return) mu += v / static_cast<double>(eu.mean_return.size());
        result.eval_guided.emplace_back(it, mg);
        result.eval_uniform.emplace_back(it, mu);
        if (persist) write_lines(out / "eval.csv", {std::to_string(it) + "," + fmt(mg) + "," + fmt(mu)}, true);
      }

      if (persist) {
        write_lines(out / "metrics.csv", {metrics_line(row)}, true);
        std::vector<std::string> dl;
        for (const Vec& d : designs)
          dl.push_back(envs::serialize_design(scenario->id(), d, {{"iteration", it}, {"method", method_name(method)}}));
        write_lines(out / "designs.jsonl", dl, true);
        if (!diags.empty()) {
          std::ofstream g(out / "guidance.jsonl", std::ios::app);
          for (const auto& c : diags) {
            nlohmann::json j = c.to_json();
            j["iteration"] = it;
            g << j.dump() << '\n';
          }
        }
      }
      if (opts.on_iteration) opts.on_iteration(row);
      if (persist && cd.checkpoint_every > 0 && (it + 1) % cd.checkpoint_every == 0) {
        st.iteration = it + 1;
        save_state();
        st.iteration = it;
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("iteration " + std::to_string(it) + " (seed " + std::to_string(seed) + ", method " +
                               method_name(method) + "): " + e.what());
    }
  }
  if (persist) {
    save_state();
    nlohmann::json critic_file{{"env_critic", env_critic.to_json()}, {"config_hash", cfg.config_hash()}};
    write_lines(ckpt_dir / "env_critic.json", {critic_file.dump()}, false);
  }
  return result;
}

}  // namespace dicode::codesign
