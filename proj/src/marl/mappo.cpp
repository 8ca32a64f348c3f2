#include "dicode/marl/mappo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "dicode/core/errors.hpp"
#include "dicode/core/parallel.hpp"
#include "dicode/nn/json_util.hpp"

namespace dicode::marl {

// ---------------------------------------------------------------------------
// Config

void MarlConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidArgument("marl.gamma must be in [0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw InvalidArgument("marl.gae_lambda must be in [0, 1]");
  if (!(clip_ratio > 0.0)) throw InvalidArgument("marl.clip_ratio must be positive");
  if (!(policy_lr >= 0.0 && critic_lr >= 0.0)) throw InvalidArgument("marl learning rates must be >= 0");
  if (epochs < 1 || minibatches < 1) throw InvalidArgument("marl.epochs and marl.minibatches must be >= 1");
  if (!(max_grad_norm > 0.0) || !(huber_delta > 0.0)) throw InvalidArgument("marl.max_grad_norm and huber_delta must be positive");
}

nlohmann::json MarlConfig::to_json() const {
  return {{"policy_hidden", policy_hidden}, {"critic_hidden", critic_hidden}, {"policy_lr", policy_lr},
          {"critic_lr", critic_lr},         {"gamma", gamma},                 {"gae_lambda", gae_lambda},
          {"clip_ratio", clip_ratio},       {"entropy_coef", entropy_coef},   {"huber_delta", huber_delta},
          {"max_grad_norm", max_grad_norm}, {"epochs", epochs},               {"minibatches", minibatches},
          {"advantage_norm", advantage_norm}, {"critic_norm", critic_norm},   {"total_updates", total_updates}};
}

MarlConfig MarlConfig::from_json(const nlohmann::json& j) {
  MarlConfig c;
  c.policy_hidden = j.at("policy_hidden").get<std::vector<int>>();
  c.critic_hidden = j.at("critic_hidden").get<std::vector<int>>();
  c.policy_lr = j.at("policy_lr").get<double>();
  c.critic_lr = j.at("critic_lr").get<double>();
  c.gamma = j.at("gamma").get<double>();
  c.gae_lambda = j.at("gae_lambda").get<double>();
  c.clip_ratio = j.at("clip_ratio").get<double>();
  c.entropy_coef = j.at("entropy_coef").get<double>();
  c.huber_delta = j.at("huber_delta").get<double>();
  c.max_grad_norm = j.at("max_grad_norm").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.minibatches = j.at("minibatches").get<int>();
  c.advantage_norm = j.at("advantage_norm").get<bool>();
  c.critic_norm = j.at("critic_norm").get<bool>();
  c.total_updates = j.at("total_updates").get<int>();
  return c;
}

// ---------------------------------------------------------------------------
// Networks

namespace {

Mat softmax_cols(const Mat& z) {
  Mat p(z.rows(), z.cols());
  for (Index j = 0; j < z.cols(); ++j) {
    const Eigen::ArrayXd e = (z.col(j).array() - z.col(j).maxCoeff()).exp();
    p.col(j) = (e / e.sum()).matrix();
  }
  return p;
}

int sample_categorical(const Vec& p, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (Index k = 0; k < p.size(); ++k) {
    acc += p[k];
    if (u < acc) return static_cast<int>(k);
  }
  return static_cast<int>(p.size() - 1);
}

}  // namespace

Policy::Policy(int obs_dim, int n_actions, const std::vector<int>& hidden, Rng& rng) {
  std::vector<int> sizes{obs_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(n_actions);
  net_ = nn::Mlp(sizes, nn::Activation::Tanh, rng, 0.01);
}

Mat Policy::logits(const Mat& obs) const { return net_.forward(obs); }

Mat Policy::probabilities(const Mat& obs) const { return softmax_cols(logits(obs)); }

std::vector<int> Policy::act(const Mat& obs, Rng& rng, Vec* log_probs) const {
  const Mat p = probabilities(obs);
  std::vector<int> a(static_cast<std::size_t>(obs.cols()));
  if (log_probs) log_probs->resize(obs.cols());
  for (Index j = 0; j < obs.cols(); ++j) {
    a[static_cast<std::size_t>(j)] = sample_categorical(p.col(j), rng);
    if (log_probs) (*log_probs)[j] = std::log(std::max(p(a[static_cast<std::size_t>(j)], j), 1e-300));
  }
  return a;
}

std::vector<int> Policy::act_greedy(const Mat& obs) const {
  const Mat z = logits(obs);
  std::vector<int> a(static_cast<std::size_t>(obs.cols()));
  for (Index j = 0; j < obs.cols(); ++j) z.col(j).maxCoeff(&a[static_cast<std::size_t>(j)]);
  return a;
}

AgentCritic::AgentCritic(int input_dim, const std::vector<int>& hidden, Rng& rng) {
  std::vector<int> sizes{input_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  net_ = nn::Mlp(sizes, nn::Activation::Tanh, rng);
}

Mat AgentCritic::inputs(const Vec& state, const Mat& obs) {
  Mat in(state.size() + obs.rows(), obs.cols());
  for (Index j = 0; j < obs.cols(); ++j) {
    in.col(j).head(state.size()) = state;
    in.col(j).tail(obs.rows()) = obs.col(j);
  }
  return in;
}

Vec AgentCritic::values_batch(const Mat& in) const {
  return (mean + std * net_.forward(in).row(0).array()).matrix().transpose();
}

Vec AgentCritic::values(const Vec& state, const Mat& obs) const { return values_batch(inputs(state, obs)); }

double AgentCritic::team_value(const envs::Env& env) const {
  return values(env.global_state(), env.observations()).sum();
}

// ---------------------------------------------------------------------------
// Rollouts

double surrogate_ratio_gradient(double ratio, double advantage, double eps) {
  const bool active = advantage >= 0.0 ? ratio < 1.0 + eps : ratio > 1.0 - eps;
  return active ? advantage : 0.0;
}

long long RolloutBatch::frames() const {
  long long f = 0;
  for (const auto& t : trajectories) f += static_cast<long long>(t.steps()) * t.rewards.cols();
  return f;
}

double RolloutBatch::mean_team_return() const {
  if (trajectories.empty()) return 0.0;
  double s = 0.0;
  for (const auto& t : trajectories) s += t.team_return();
  return s / static_cast<double>(trajectories.size());
}

namespace {

Trajectory run_episode(const envs::Scenario& scenario, const Vec& design, std::uint64_t inst_seed,
                       std::uint64_t act_seed, const Policy& policy, const AgentCritic* critic, bool greedy) {
  Trajectory tr;
  tr.design = design;
  tr.seed = inst_seed;
  auto env = scenario.instantiate(design, inst_seed);
  Rng rng(act_seed);
  const int n = scenario.n_agents();
  const int H = scenario.horizon();
  tr.log_probs.resize(H, n);
  tr.values = Mat::Zero(H + 1, n);
  tr.rewards.resize(H, n);
  tr.base_team_reward.resize(H);
  tr.initial_potential = env->potential();
  Vec phi = tr.initial_potential;
  int t = 0;
  for (; t < H; ++t) {
    Mat obs = env->observations();
    Vec state = env->global_state();
    if (critic) tr.values.row(t) = critic->values(state, obs).transpose();
    Vec lp;
    std::vector<int> a = greedy ? policy.act_greedy(obs) : policy.act(obs, rng, &lp);
    if (greedy) lp = Vec::Zero(n);
    const envs::StepResult res = env->step(a);
    const Vec phi_next = env->potential();
    tr.rewards.row(t) = envs::shaped_reward(phi, phi_next, res.rewards).transpose();
    tr.base_team_reward[t] = res.rewards.sum();
    phi = phi_next;
    tr.log_probs.row(t) = lp.transpose();
    tr.obs.push_back(std::move(obs));
    tr.state.push_back(std::move(state));
    tr.actions.push_back(std::move(a));
    tr.done.push_back(res.done ? 1 : 0);
    if (res.done) {
      ++t;
      break;
    }
  }
  tr.log_probs.conservativeResize(t, n);
  tr.rewards.conservativeResize(t, n);
  tr.base_team_reward.conservativeResize(t);
  tr.values.conservativeResize(t + 1, n);
  tr.values.row(t).setZero();
  if (critic && !tr.done.empty() && !tr.done.back())
    tr.values.row(t) = critic->values(env->global_state(), env->observations()).transpose();
  tr.final_potential = phi;
  return tr;
}

}  // namespace

RolloutBatch rollout(const envs::Scenario& scenario, const std::vector<Vec>& designs, const Policy& policy,
                     const AgentCritic& critic, Rng& rng, const RolloutOptions& opts) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> seeds(designs.size());
  for (auto& s : seeds) {
    s.first = rng.next_u64();
    s.second = rng.next_u64();
  }
  RolloutBatch batch;
  batch.trajectories.resize(designs.size());
  parallel_for(designs.size(), opts.workers, [&](std::size_t i) {
    const std::uint64_t inst = opts.fixed_seed ? *opts.fixed_seed : seeds[i].first;
    batch.trajectories[i] = run_episode(scenario, designs[i], inst, seeds[i].second, policy, &critic, opts.greedy);
  });
  return batch;
}

void gae(const Vec& rewards, const Vec& values, const std::vector<char>& done, double gamma, double lam,
         Vec& advantages, Vec& returns) {
  const Index T = rewards.size();
  if (values.size() != T + 1 || static_cast<Index>(done.size()) != T) throw InvalidArgument("gae: size mismatch");
  advantages.resize(T);
  double running = 0.0;
  for (Index t = T - 1; t >= 0; --t) {
    const double cont = done[static_cast<std::size_t>(t)] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * values[t + 1] * cont - values[t];
    running = delta + gamma * lam * cont * running;
    advantages[t] = running;
  }
  returns = advantages + values.head(T);
}

void compute_gae(RolloutBatch& batch, double gamma, double lam) {
  for (auto& tr : batch.trajectories) {
    const Index T = tr.steps(), n = tr.rewards.cols();
    tr.advantages.resize(T, n);
    tr.returns.resize(T, n);
    for (Index a = 0; a < n; ++a) {
      Vec adv, ret;
      gae(tr.rewards.col(a), tr.values.col(a), tr.done, gamma, lam, adv, ret);
      tr.advantages.col(a) = adv;
      tr.returns.col(a) = ret;
    }
  }
}

// ---------------------------------------------------------------------------
// Updates

Mappo::Mappo(const envs::Scenario& scenario, const MarlConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  policy = Policy(scenario.obs_dim(), scenario.n_actions(), cfg_.policy_hidden, rng);
  critic = AgentCritic(scenario.state_dim() + scenario.obs_dim(), cfg_.critic_hidden, rng);
  policy_opt_ = nn::Adam(policy.net().num_params(), nn::AdamConfig{.lr = cfg_.policy_lr});
  critic_opt_ = nn::Adam(critic.net().num_params(), nn::AdamConfig{.lr = cfg_.critic_lr});
}

double Mappo::lr_scale() const {
  if (cfg_.total_updates <= 0) return 1.0;
  const double frac = std::min(1.0, static_cast<double>(updates_) / cfg_.total_updates);
  return 0.5 * (1.0 + std::cos(M_PI * frac));
}

UpdateReport Mappo::update(const RolloutBatch& batch, Rng& rng) {
  // Flatten (trajectory, step, agent) samples.
  Index n_samples = 0;
  for (const auto& tr : batch.trajectories) n_samples += static_cast<Index>(tr.steps()) * tr.rewards.cols();
  if (n_samples == 0) throw InvalidArgument("ppo update: empty batch");
  const Index obs_dim = batch.trajectories.front().obs.front().rows();
  const Index state_dim = batch.trajectories.front().state.front().size();
  Mat obs(obs_dim, n_samples), cin(state_dim + obs_dim, n_samples);
  std::vector<int> actions(static_cast<std::size_t>(n_samples));
  Vec old_lp(n_samples), adv(n_samples), ret(n_samples);
  Index k = 0;
  for (const auto& tr : batch.trajectories) {
    if (tr.advantages.rows() != tr.steps()) throw InvalidArgument("ppo update: advantages not computed");
    for (int t = 0; t < tr.steps(); ++t) {
      for (Index a = 0; a < tr.rewards.cols(); ++a, ++k) {
        obs.col(k) = tr.obs[static_cast<std::size_t>(t)].col(a);
        cin.col(k).head(state_dim) = tr.state[static_cast<std::size_t>(t)];
        cin.col(k).tail(obs_dim) = obs.col(k);
        actions[static_cast<std::size_t>(k)] = tr.actions[static_cast<std::size_t>(t)][static_cast<std::size_t>(a)];
        old_lp[k] = tr.log_probs(t, a);
        adv[k] = tr.advantages(t, a);
        ret[k] = tr.returns(t, a);
      }
    }
  }
  if (cfg_.advantage_norm && n_samples > 1) {
    const double m = adv.mean();
    const double sd = std::sqrt((adv.array() - m).square().sum() / (n_samples - 1));
    adv = ((adv.array() - m) / (sd + 1e-8)).matrix();
  }
  const Vec target = ((ret.array() - critic.mean) / critic.std).matrix();

  const double scale = lr_scale();
  const double eps = cfg_.clip_ratio;
  UpdateReport report;
  int n_minibatches_run = 0;
  std::vector<Index> order(static_cast<std::size_t>(n_samples));
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    for (Index i = n_samples - 1; i > 0; --i)
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(rng.uniform_int(0, i))]);
    const Index mb_size = std::max<Index>(1, n_samples / cfg_.minibatches);
    for (Index start = 0; start < n_samples; start += mb_size) {
      const Index end = std::min(n_samples, start + mb_size);
      const Index m = end - start;
      Mat mb_obs(obs_dim, m), mb_cin(cin.rows(), m);
      for (Index j = 0; j < m; ++j) {
        mb_obs.col(j) = obs.col(order[static_cast<std::size_t>(start + j)]);
        mb_cin.col(j) = cin.col(order[static_cast<std::size_t>(start + j)]);
      }

      // Policy: clipped surrogate and entropy bonus, differentiated through the logits.
      nn::MlpTape ptape;
      const Mat z = policy.net().forward(mb_obs, ptape);
      const Mat p = softmax_cols(z);
      Mat dz = Mat::Zero(z.rows(), m);
      double pl = 0.0, ent = 0.0, kl = 0.0, clipped = 0.0;
      for (Index j = 0; j < m; ++j) {
        const Index s = order[static_cast<std::size_t>(start + j)];
        const int a = actions[static_cast<std::size_t>(s)];
        const Eigen::ArrayXd logp = p.col(j).array().max(1e-300).log();
        const double ratio = std::exp(logp[a] - old_lp[s]);
        const double A = adv[s];
        const double unclipped = ratio * A;
        const double clip_val = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * A;
        pl -= std::min(unclipped, clip_val);
        const double dsurr = surrogate_ratio_gradient(ratio, A, eps);
        if (dsurr == 0.0 && A != 0.0) clipped += 1.0;
        const double H = -(p.col(j).array() * logp).sum();
        ent += H;
        kl += old_lp[s] - logp[a];
        // d(-surrogate)/dz
        if (dsurr != 0.0) {
          Vec g = -p.col(j);
          g[a] += 1.0;
          dz.col(j) -= ratio * dsurr * g;
        }
        // d(-c * H)/dz = c * p_k (log p_k + H)
        dz.col(j) += cfg_.entropy_coef * (p.col(j).array() * (logp + H)).matrix();
      }
      dz /= static_cast<double>(m);
      const double policy_loss = pl / m - cfg_.entropy_coef * ent / m;
      if (!std::isfinite(policy_loss)) throw NumericalError("ppo update: non-finite policy loss");
      Vec pgrad = Vec::Zero(policy.net().num_params());
      policy.net().backward(ptape, dz, &pgrad);
      nn::clip_grad_norm(pgrad, cfg_.max_grad_norm);
      policy_opt_.step(policy.net().params(), pgrad, cfg_.policy_lr * scale);

      // Critic: Huber regression on (normalized) returns.
      nn::MlpTape ctape;
      const Mat v = critic.net().forward(mb_cin, ctape);
      Mat dv(1, m);
      double vl = 0.0;
      for (Index j = 0; j < m; ++j) {
        const double diff = v(0, j) - target[order[static_cast<std::size_t>(start + j)]];
        const double ad = std::abs(diff);
        vl += ad <= cfg_.huber_delta ? 0.5 * diff * diff : cfg_.huber_delta * (ad - 0.5 * cfg_.huber_delta);
        dv(0, j) = std::clamp(diff, -cfg_.huber_delta, cfg_.huber_delta) / static_cast<double>(m);
      }
      if (!std::isfinite(vl)) throw NumericalError("ppo update: non-finite value loss");
      Vec cgrad = Vec::Zero(critic.net().num_params());
      critic.net().backward(ctape, dv, &cgrad);
      nn::clip_grad_norm(cgrad, cfg_.max_grad_norm);
      critic_opt_.step(critic.net().params(), cgrad, cfg_.critic_lr * scale);

      report.policy_loss += policy_loss;
      report.value_loss += vl / m;
      report.entropy += ent / m;
      report.approx_kl += kl / m;
      report.clip_fraction += clipped / m;
      ++n_minibatches_run;
    }
  }
  const double d = std::max(1, n_minibatches_run);
  report.policy_loss /= d;
  report.value_loss /= d;
  report.entropy /= d;
  report.approx_kl /= d;
  report.clip_fraction /= d;
  ++updates_;
  return report;
}

void Mappo::fit_critic_normalization(const envs::Scenario& scenario, const std::vector<Vec>& designs, Rng& rng) {
  Policy uniform = policy;
  uniform.net().params().setZero();
  AgentCritic zero = critic;
  zero.net().params().setZero();
  zero.mean = 0.0;
  zero.std = 1.0;
  RolloutBatch b = rollout(scenario, designs, uniform, zero, rng);
  compute_gae(b, cfg_.gamma, 1.0);
  std::vector<double> r;
  for (const auto& tr : b.trajectories)
    for (Index i = 0; i < tr.returns.size(); ++i) r.push_back(tr.returns.data()[i]);
  if (r.size() < 2) return;
  const double m = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
  double var = 0.0;
  for (double x : r) var += (x - m) * (x - m);
  var /= static_cast<double>(r.size() - 1);
  critic.mean = m;
  critic.std = std::max(std::sqrt(var), 1e-6);
}

void Mappo::save(const std::string& path, const std::string& config_hash) const {
  nlohmann::json j{{"config", cfg_.to_json()},
                   {"config_hash", config_hash},
                   {"updates", updates_},
                   {"policy", policy.net().to_json()},
                   {"critic", critic.net().to_json()},
                   {"critic_norm", {{"mean", critic.mean}, {"std", critic.std}}},
                   {"policy_opt", policy_opt_.state()},
                   {"critic_opt", critic_opt_.state()}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << kMarlMagic << '\n' << j.dump() << '\n';
}

void Mappo::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string magic, body;
  std::getline(in, magic);
  if (magic != kMarlMagic) throw InvalidArgument("not a MARL checkpoint: " + path);
  std::getline(in, body);
  const auto j = nlohmann::json::parse(body);
  cfg_ = MarlConfig::from_json(j.at("config"));
  updates_ = j.at("updates").get<long long>();
  policy.net() = nn::Mlp::from_json(j.at("policy"));
  critic.net() = nn::Mlp::from_json(j.at("critic"));
  critic.mean = j.at("critic_norm").at("mean").get<double>();
  critic.std = j.at("critic_norm").at("std").get<double>();
  policy_opt_.load_state(j.at("policy_opt"));
  critic_opt_.load_state(j.at("critic_opt"));
}

Evaluation evaluate(const envs::Scenario& scenario, const Policy& policy, const std::vector<Vec>& designs,
                    int episodes_per_design, Rng& rng, const RolloutOptions& opts) {
  if (episodes_per_design < 1) throw InvalidArgument("evaluate: episodes_per_design must be >= 1");
  std::vector<Vec> repeated;
  for (const Vec& d : designs)
    for (int e = 0; e < episodes_per_design; ++e) repeated.push_back(d);
  std::vector<std::pair<std::uint64_t, std::uint64_t>> seeds(repeated.size());
  for (auto& s : seeds) {
    s.first = rng.next_u64();
    s.second = rng.next_u64();
  }
  std::vector<double> returns(repeated.size());
  parallel_for(repeated.size(), opts.workers, [&](std::size_t i) {
    const std::uint64_t inst = opts.fixed_seed ? *opts.fixed_seed : seeds[i].first;
    returns[i] = run_episode(scenario, repeated[i], inst, seeds[i].second, policy, nullptr, opts.greedy).team_return();
  });
  Evaluation ev;
  const auto E = static_cast<std::size_t>(episodes_per_design);
  for (std::size_t d = 0; d < designs.size(); ++d) {
    double m = 0.0;
    for (std::size_t e = 0; e < E; ++e) m += returns[d * E + e];
    m /= static_cast<double>(E);
    double var = 0.0;
    for (std::size_t e = 0; e < E; ++e) var += (returns[d * E + e] - m) * (returns[d * E + e] - m);
    ev.mean_return.push_back(m);
    ev.std_error.push_back(E > 1 ? std::sqrt(var / static_cast<double>(E - 1) / static_cast<double>(E)) : 0.0);
  }
  return ev;
}

}  // namespace dicode::marl
