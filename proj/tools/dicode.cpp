#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dicode/analysis/analysis.hpp"
#include "dicode/codesign/codesign.hpp"
#include "dicode/core/errors.hpp"
#include "dicode/core/hash.hpp"
#include "dicode/core/parallel.hpp"
#include "dicode/diffusion/checkpoint.hpp"
#include "dicode/diffusion/ops.hpp"
#include "dicode/envs/nav.hpp"
#include "dicode/envs/warehouse.hpp"
#include "plot.hpp"

namespace fs = std::filesystem;
using namespace dicode;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

// Usage problems that are not config-file errors but should still exit 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  return json::parse(in);
}

// Refuses to reuse an existing output unless --overwrite is given.
void claim_output(const fs::path& p, bool overwrite) {
  if (fs::exists(p) && (!fs::is_directory(p) || !fs::is_empty(p))) {
    if (!overwrite) throw UsageError("refusing to overwrite existing output " + p.string() + " (pass --overwrite)");
    fs::remove_all(p);
  }
}

std::string file_hash(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return to_hex(fnv1a64(ss.str()));
}

fs::path prior_path(const codesign::ExperimentConfig& cfg, const std::string& out, const std::string& explicit_path) {
  if (!explicit_path.empty()) return explicit_path;
  return fs::path(out.empty() ? cfg.output_dir : out) / "prior" / "denoiser.ckpt";
}

// ---------------------------------------------------------------------------

int cmd_init(const std::string& scenario, const std::string& out, bool overwrite) {
  const auto cfg = codesign::default_config(scenario);
  if (fs::exists(out) && !overwrite) throw UsageError("refusing to overwrite " + out + " (pass --overwrite)");
  write_file(out, cfg.to_json().dump(2) + "\n");
  std::cout << "wrote " << out << " (config " << cfg.config_hash() << ")\n";
  return 0;
}

int cmd_pretrain(const codesign::ExperimentConfig& cfg, const std::string& out, bool overwrite) {
  const fs::path dir = fs::path(out.empty() ? cfg.output_dir : out) / "prior";
  claim_output(dir, overwrite);
  fs::create_directories(dir);
  const std::uint64_t seed = cfg.seeds.front();
  std::vector<double> losses;
  const auto d = codesign::pretrain_prior(cfg, seed, &losses);
  const auto schedule = diffusion::make_schedule(cfg.diffusion.T, cfg.diffusion.beta_start, cfg.diffusion.beta_end);
  const fs::path ckpt = dir / "denoiser.ckpt";
  diffusion::save_denoiser(ckpt.string(), d, schedule, cfg.scenario.id);

  // Feasibility census: raw samples and after one projection call.
  const auto scenario = envs::make_scenario(cfg.scenario.id, {cfg.scenario.horizon});
  Rng rng(mix_seed(seed, 200));
  const int n = 256;
  int feasible_raw = 0, feasible_proj = 0;
  const auto P = scenario->projection();
  for (int i = 0; i < n; ++i) {
    const Vec x = diffusion::sample_unconditional(d, schedule, cfg.diffusion.ddim_steps, rng).data;
    feasible_raw += scenario->validate(x).ok ? 1 : 0;
    feasible_proj += scenario->validate(P->project(x)).ok ? 1 : 0;
  }
  json report{{"config_hash", cfg.config_hash()},
              {"scenario_hash", cfg.scenario_hash()},
              {"scenario_id", cfg.scenario.id},
              {"seed", seed},
              {"checkpoint_hash", file_hash(ckpt)},
              {"samples", n},
              {"feasible_raw", static_cast<double>(feasible_raw) / n},
              {"feasible_after_projection", static_cast<double>(feasible_proj) / n},
              {"final_loss", losses.empty() ? 0.0 : losses.back()},
              {"loss_history", losses}};
  write_file(dir / "report.json", report.dump(2) + "\n");
  write_file(dir / "config.json", cfg.to_json().dump(2) + "\n");
  std::cout << "prior " << ckpt.string() << " hash " << report["checkpoint_hash"].get<std::string>()
            << " raw feasibility " << report["feasible_raw"] << " after projection "
            << report["feasible_after_projection"] << "\n";
  return 0;
}

std::optional<diffusion::MlpDenoiser> load_prior_for(const codesign::ExperimentConfig& cfg, codesign::Method m,
                                                     const fs::path& path) {
  if (!codesign::uses_prior(m)) return std::nullopt;
  if (!fs::exists(path))
    throw std::runtime_error("method " + codesign::method_name(m) + " needs a prior; run `dicode pretrain` first (" +
                             path.string() + " missing)");
  auto ck = diffusion::load_denoiser(path.string());
  if (ck.scenario_id != cfg.scenario.id)
    throw std::runtime_error("prior was trained for scenario '" + ck.scenario_id + "'");
  return std::move(ck.denoiser);
}

fs::path run_dir(const fs::path& root, codesign::Method m, std::uint64_t seed) {
  return root / codesign::method_name(m) / ("seed_" + std::to_string(seed));
}

std::vector<double> run_one(const codesign::ExperimentConfig& cfg, codesign::Method m, std::uint64_t seed,
                            const diffusion::MlpDenoiser* prior, const fs::path& dir, int workers, bool overwrite,
                            bool resume, const std::string& prior_hash) {
  if (!resume) claim_output(dir, overwrite);
  fs::create_directories(dir);
  write_file(dir / "config.json", cfg.to_json().dump(2) + "\n");
  json run{{"method", codesign::method_name(m)}, {"seed", seed},
           {"scenario_id", cfg.scenario.id},    {"config_hash", cfg.config_hash()},
           {"scenario_hash", cfg.scenario_hash()}, {"prior_hash", prior_hash},
           {"status", "running"}};
  write_file(dir / "run.json", run.dump(2) + "\n");
  codesign::RunOptions opts;
  opts.out_dir = dir.string();
  opts.workers = workers;
  opts.resume = resume;
  const int total = cfg.codesign.iterations;
  opts.on_iteration = [&](const codesign::MetricsRow& r) {
    if ((r.iteration + 1) % std::max(1, total / 10) == 0 || r.iteration + 1 == total)
      std::cerr << "[" << codesign::method_name(m) << " seed " << seed << "] iter " << r.iteration + 1 << "/"
                << total << " frames " << r.frames << " return " << r.mean_return << "\n";
  };
  try {
    const auto res = codesign::run_codesign(cfg, m, seed, prior, opts);
    std::vector<double> curve;
    for (const auto& r : res.metrics) curve.push_back(r.mean_return);
    run["status"] = "done";
    run["final_smoothed"] = analysis::ema(curve).back();
    run["unique_designs"] = [&] {
      std::set<std::uint64_t> u;
      for (const Vec& d : res.designs) u.insert(array_hash(d));
      return u.size();
    }();
    write_file(dir / "run.json", run.dump(2) + "\n");
    return curve;
  } catch (const std::exception& e) {
    run["status"] = "failed";
    run["error"] = e.what();
    write_file(dir / "run.json", run.dump(2) + "\n");
    throw;
  }
}

int cmd_train(const codesign::ExperimentConfig& cfg, const std::vector<std::string>& methods,
              const std::vector<std::uint64_t>& seeds, const std::string& out, const std::string& prior_arg,
              int workers, bool overwrite, bool resume) {
  const fs::path root(out.empty() ? cfg.output_dir : out);
  const fs::path ppath = prior_path(cfg, out, prior_arg);
  std::map<std::string, std::vector<double>> finals;
  for (const auto& name : methods) {
    const auto m = codesign::method_from_name(name);
    const auto prior = load_prior_for(cfg, m, ppath);
    const std::string ph = prior ? file_hash(ppath) : "";
    for (const auto s : seeds) {
      const auto curve = run_one(cfg, m, s, prior ? &*prior : nullptr, run_dir(root, m, s), workers, overwrite,
                                 resume, ph);
      finals[codesign::method_name(m)].push_back(analysis::ema(curve).back());
    }
  }
  for (const auto& [name, v] : finals) {
    std::cout << name << " final smoothed return: mean " << analysis::mean(v);
    if (v.size() > 1) std::cout << " sd " << analysis::sample_std(v);
    std::cout << " over " << v.size() << " seed(s)\n";
  }
  return 0;
}

int cmd_ablate(const codesign::ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds, const std::string& out,
               const std::string& prior_arg, int workers, bool overwrite) {
  const std::vector<std::string> variants{"dicode", "dicode-descent", "dicode-sampling", "dicode-add", "dicode-mc"};
  const fs::path root(out.empty() ? cfg.output_dir : out);
  const fs::path ppath = prior_path(cfg, out, prior_arg);
  std::map<std::string, std::vector<double>> finals;
  for (const auto& name : variants) {
    const auto m = codesign::method_from_name(name);
    const auto prior = load_prior_for(cfg, m, ppath);
    const std::string ph = prior ? file_hash(ppath) : "";
    for (const auto s : seeds)
      finals[name].push_back(analysis::ema(run_one(cfg, m, s, prior ? &*prior : nullptr, run_dir(root, m, s), workers,
                                                   overwrite, false, ph))
                                 .back());
  }
  json summary{{"config_hash", cfg.config_hash()}, {"scenario_hash", cfg.scenario_hash()}};
  for (const auto& name : variants) {
    json row{{"finals", finals[name]}, {"mean", analysis::mean(finals[name])}};
    if (name != "dicode" && seeds.size() >= 3) {
      const auto c = analysis::compare_runs(finals["dicode"], finals[name]);
      row["dicode_minus_variant"] = {{"estimate", c.estimate}, {"ci_low", c.ci_low}, {"ci_high", c.ci_high}};
    }
    summary["variants"][name] = row;
    std::cout << name << ": mean final smoothed " << row["mean"] << "\n";
  }
  write_file(root / "ablation.json", summary.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------
// Run-directory readers shared by evaluate and plot.

struct RunInfo {
  fs::path dir;
  json meta;
  codesign::ExperimentConfig cfg;
};

// Accepts a seed directory, a method directory or an experiment root.
std::vector<RunInfo> collect_runs(const std::vector<std::string>& roots) {
  std::vector<RunInfo> runs;
  std::function<void(const fs::path&)> visit = [&](const fs::path& p) {
    if (fs::exists(p / "run.json")) {
      runs.push_back({p, read_json(p / "run.json"), codesign::ExperimentConfig::load((p / "config.json").string())});
      return;
    }
    if (!fs::is_directory(p)) return;
    std::vector<fs::path> kids;
    for (const auto& e : fs::directory_iterator(p))
      if (e.is_directory()) kids.push_back(e.path());
    std::sort(kids.begin(), kids.end());
    for (const auto& k : kids) visit(k);
  };
  for (const auto& r : roots) {
    if (!fs::exists(r)) throw std::runtime_error("no such run directory " + r);
    visit(r);
  }
  if (runs.empty()) throw std::runtime_error("no runs found under the given directories");
  std::set<std::string> hashes;
  for (const auto& r : runs) hashes.insert(r.meta.at("scenario_hash").get<std::string>());
  if (hashes.size() > 1) throw std::runtime_error("runs come from different scenario configurations");
  return runs;
}

std::vector<Vec> read_designs(const fs::path& dir) {
  std::ifstream in(dir / "designs.jsonl");
  std::vector<Vec> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(envs::parse_design(line).theta);
  return out;
}

int cmd_evaluate(const std::vector<std::string>& dirs, int n_designs, int episodes, int workers) {
  for (const auto& run : collect_runs(dirs)) {
    const auto& cfg = run.cfg;
    const auto scenario = envs::make_scenario(cfg.scenario.id, {cfg.scenario.horizon});
    Rng rng(mix_seed(run.meta.at("seed").get<std::uint64_t>(), 900));
    marl::Mappo mappo(*scenario, cfg.marl, rng);
    mappo.load((run.dir / "checkpoints" / "marl.ckpt").string());
    auto archive = read_designs(run.dir);
    if (archive.empty()) throw std::runtime_error("empty design archive in " + run.dir.string());
    std::vector<Vec> recent(archive.end() - std::min<std::ptrdiff_t>(n_designs, static_cast<std::ptrdiff_t>(archive.size())),
                            archive.end());
    std::vector<Vec> uniform;
    for (int i = 0; i < n_designs; ++i) uniform.push_back(scenario->uniform_generate(rng));
    marl::RolloutOptions ro;
    ro.workers = workers;
    const auto er = marl::evaluate(*scenario, mappo.policy, recent, episodes, rng, ro);
    const auto eu = marl::evaluate(*scenario, mappo.policy, uniform, episodes, rng, ro);
    json out{{"config_hash", cfg.config_hash()},
             {"scenario_hash", cfg.scenario_hash()},
             {"method", run.meta.at("method")},
             {"seed", run.meta.at("seed")},
             {"recent_designs", analysis::mean(er.mean_return)},
             {"uniform_designs", analysis::mean(eu.mean_return)},
             {"designs", n_designs},
             {"episodes_per_design", episodes}};
    write_file(run.dir / "evaluation.json", out.dump(2) + "\n");
    std::cout << run.dir.string() << ": recent designs " << out["recent_designs"] << ", uniform designs "
              << out["uniform_designs"] << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Plots

void plot_curves_cmd(const std::vector<RunInfo>& runs, const std::string& stem) {
  std::map<std::string, std::vector<std::vector<codesign::MetricsRow>>> by_method;
  for (const auto& r : runs)
    by_method[r.meta.at("method").get<std::string>()].push_back(
        codesign::read_metrics((r.dir / "metrics.csv").string()));
  std::vector<tools::Series> series;
  Rng rng(7);
  for (const auto& [method, seeds] : by_method) {
    std::size_t len = SIZE_MAX;
    for (const auto& s : seeds) len = std::min(len, s.size());
    if (len == 0 || len == SIZE_MAX) throw std::runtime_error("empty metrics for " + method);
    std::vector<std::vector<double>> smooth;
    for (const auto& s : seeds) {
      std::vector<double> y;
      for (std::size_t i = 0; i < len; ++i) y.push_back(s[i].mean_return);
      smooth.push_back(analysis::ema(y));
    }
    tools::Series ser;
    ser.label = method + " (n=" + std::to_string(seeds.size()) + ")";
    for (std::size_t i = 0; i < len; ++i) {
      double m = 0.0;
      for (const auto& y : smooth) m += y[i] / static_cast<double>(smooth.size());
      ser.x.push_back(static_cast<double>(seeds.front()[i].frames));
      ser.y.push_back(m);
      if (smooth.size() > 1) {
        // Percentile bootstrap of the across-seed mean.
        std::vector<double> boot;
        for (int b = 0; b < 1000; ++b) {
          double s = 0.0;
          for (std::size_t k = 0; k < smooth.size(); ++k)
            s += smooth[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(smooth.size()) - 1))][i];
          boot.push_back(s / static_cast<double>(smooth.size()));
        }
        std::sort(boot.begin(), boot.end());
        ser.lo.push_back(boot[25]);
        ser.hi.push_back(boot[974]);
      }
    }
    series.push_back(std::move(ser));
  }
  tools::plot_curves(stem, "Training return (EMA 0.95)", "agent frames", "team return", series);
}

struct Occupancy {
  std::vector<std::string> titles;
  std::vector<std::vector<double>> grids;
  int rows = 0, cols = 0;
};

Occupancy occupancy(const envs::Scenario& sc, const std::vector<Vec>& designs) {
  Occupancy o;
  const double n = static_cast<double>(designs.size());
  if (const auto* wh = dynamic_cast<const envs::WarehouseScenarioBase*>(&sc)) {
    using WP = envs::WarehouseParams;
    o.rows = WP::kRows;
    o.cols = WP::kCols;
    o.grids.assign(WP::kColours, std::vector<double>(WP::kRows * WP::kCols, 0.0));
    for (const Vec& d : designs) {
      const auto lay = wh->layout(d);
      for (std::size_t i = 0; i < lay.cells.size(); ++i)
        o.grids[static_cast<std::size_t>(lay.colours[i])][static_cast<std::size_t>(lay.cells[i])] += 1.0 / n;
    }
    o.titles = {"colour 0 shelves (goals left)", "colour 1 shelves (goals right)"};
    return o;
  }
  // Continuous designs: rasterize point positions.
  o.rows = 24;
  o.cols = 40;
  o.grids.assign(1, std::vector<double>(static_cast<std::size_t>(o.rows * o.cols), 0.0));
  const bool nav = sc.id() == "nav";
  const double xr = nav ? envs::NavScenario::kArenaX : 1.0, yr = nav ? envs::NavScenario::kArenaY : 1.0;
  for (const Vec& d : designs) {
    const Vec pts = nav ? envs::NavScenario::obstacle_centres(d) : d;
    std::set<int> hit;
    for (Index i = 0; i + 1 < pts.size(); i += 2) {
      const int c = std::clamp(static_cast<int>((pts[i] + xr) / (2 * xr) * o.cols), 0, o.cols - 1);
      const int r = std::clamp(static_cast<int>((yr - pts[i + 1]) / (2 * yr) * o.rows), 0, o.rows - 1);
      hit.insert(r * o.cols + c);
    }
    for (int h : hit) o.grids[0][static_cast<std::size_t>(h)] += 1.0 / n;
  }
  o.titles = {nav ? "obstacle occupancy" : "turbine occupancy"};
  return o;
}

void plot_heatmap_cmd(const std::vector<RunInfo>& runs, const std::string& stem, int last, int uniform_designs) {
  const auto& cfg = runs.front().cfg;
  const auto scenario = envs::make_scenario(cfg.scenario.id, {cfg.scenario.horizon});
  std::vector<Vec> designs;
  for (const auto& r : runs) {
    auto a = read_designs(r.dir);
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(last), a.size());
    designs.insert(designs.end(), a.end() - static_cast<std::ptrdiff_t>(k), a.end());
  }
  if (designs.empty()) throw std::runtime_error("design archives are empty");
  auto occ = occupancy(*scenario, designs);
  tools::plot_heatmaps(stem, occ.titles, occ.grids, occ.rows, occ.cols);
  json stats{{"designs", designs.size()}, {"scenario_hash", cfg.scenario_hash()}};
  if (const auto* wh = dynamic_cast<const envs::WarehouseScenarioBase*>(scenario.get())) {
    Rng rng(11);
    std::vector<double> trained, base;
    for (const Vec& d : designs) trained.push_back(envs::shelves_near_matching_goal(wh->layout(d)));
    for (int i = 0; i < uniform_designs; ++i)
      base.push_back(envs::shelves_near_matching_goal(wh->layout(scenario->uniform_generate(rng))));
    const auto t = analysis::mann_whitney_greater(trained, base);
    stats["near_matching_goal_mean"] = analysis::mean(trained);
    stats["uniform_baseline_mean"] = analysis::mean(base);
    stats["mann_whitney_p"] = t.p_value;
    std::cout << "shelves near a same-colour goal: trained " << analysis::mean(trained) << " vs uniform "
              << analysis::mean(base) << " (one-sided p " << t.p_value << ")\n";
  }
  write_file(stem + ".json", stats.dump(2) + "\n");
}

void plot_method_bars_cmd(const std::vector<RunInfo>& runs, const std::string& stem, const std::string& prior_arg,
                          int n, int workers) {
  const auto& run = runs.front();
  const auto& cfg = run.cfg;
  const auto scenario = envs::make_scenario(cfg.scenario.id, {cfg.scenario.horizon});
  const auto critic = guidance::MlpCritic::from_json(read_json(run.dir / "checkpoints" / "env_critic.json").at("env_critic"));
  const auto P = scenario->projection();
  const auto schedule = diffusion::make_schedule(cfg.diffusion.T, cfg.diffusion.beta_start, cfg.diffusion.beta_end);
  const diffusion::DesignGenerator gen = [&](Rng& r) { return scenario->uniform_generate(r); };
  Rng rng(mix_seed(run.meta.at("seed").get<std::uint64_t>(), 901));
  std::vector<tools::Bar> bars;
  auto add = [&](const std::string& label, const std::vector<Vec>& ds) {
    tools::Bar b;
    b.label = label;
    for (const Vec& d : ds) b.points.push_back(critic.value(d));
    b.mean = analysis::mean(b.points);
    b.err = b.points.size() > 1 ? analysis::sample_std(b.points) / std::sqrt(static_cast<double>(b.points.size())) : 0.0;
    bars.push_back(b);
  };
  std::vector<Vec> ds;
  for (int i = 0; i < n; ++i) ds.push_back(gen(rng));
  add("uniform", ds);
  ds.clear();
  for (const auto& s : guidance::topk_sample(critic, gen, cfg.codesign.sampling_pool, n, rng)) ds.push_back(s.data);
  add("top-k", ds);
  ds.clear();
  for (int i = 0; i < n; ++i)
    ds.push_back(guidance::descent_sample(critic, *P, gen, cfg.codesign.descent.restarts, cfg.codesign.descent.steps,
                                          cfg.codesign.descent.lr, rng)
                     .data);
  add("descent", ds);
  const fs::path pp = prior_arg.empty() ? fs::path(cfg.output_dir) / "prior" / "denoiser.ckpt" : fs::path(prior_arg);
  if (fs::exists(pp)) {
    const auto ck = diffusion::load_denoiser(pp.string());
    guidance::GuidanceConfig g = cfg.guidance.sampler;
    g.n_ddim_steps = cfg.diffusion.ddim_steps;
    g.omega = cfg.guidance.anneal.batches > 0 ? cfg.guidance.anneal.end : g.omega;
    guidance::SamplerOptions so;
    so.workers = workers;
    ds.clear();
    for (const auto& s : guidance::pug_sample(ck.denoiser, critic, *P, g, schedule, n, rng, so)) ds.push_back(s.data);
    add("pug", ds);
  } else {
    std::cerr << "no prior at " << pp.string() << "; skipping the guided sampler bar\n";
  }
  tools::plot_bars(stem, "Env-critic value by sampler", "critic value", bars);
  json stats{{"config_hash", cfg.config_hash()}};
  for (const auto& b : bars) stats["samplers"][b.label] = {{"mean", b.mean}, {"se", b.err}};
  write_file(stem + ".json", stats.dump(2) + "\n");
}

int cmd_plot(const std::string& kind, const std::vector<std::string>& dirs, const std::string& out, bool overwrite,
             const std::string& prior, int last, int workers) {
  const auto runs = collect_runs(dirs);
  const std::string stem = out.empty() ? kind : out;
  for (const char* ext : {".svg", ".ppm"})
    if (fs::exists(stem + ext) && !overwrite) throw UsageError("refusing to overwrite " + stem + ext);
  if (fs::path(stem).has_parent_path()) fs::create_directories(fs::path(stem).parent_path());
  if (kind == "curves") plot_curves_cmd(runs, stem);
  else if (kind == "heatmap") plot_heatmap_cmd(runs, stem, last, 100);
  else if (kind == "method_bars") plot_method_bars_cmd(runs, stem, prior, 64, workers);
  else throw UsageError("unknown plot kind " + kind);
  std::cout << "wrote " << stem << ".svg and " << stem << ".ppm\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffusion-guided environment and policy co-design"};
  app.require_subcommand(1);

  std::string config_path, out, prior, method = "dicode", kind, scenario_id;
  std::vector<std::string> methods, dirs;
  std::vector<std::uint64_t> seeds;
  int workers = 0, designs = 16, episodes = 4, last = 100;
  bool overwrite = false, resume = false;

  auto* init = app.add_subcommand("init", "Write a default config for a scenario");
  init->add_option("scenario", scenario_id, "nav | warehouse | warehouse_coord | wind")->required();
  init->add_option("--out", out, "Config path")->default_val("config.json");
  init->add_flag("--overwrite", overwrite);

  auto* pre = app.add_subcommand("pretrain", "Train the diffusion prior on uniform designs");
  auto* train = app.add_subcommand("train", "Run co-design for one or more methods and seeds");
  auto* abl = app.add_subcommand("ablate", "Run the DiCoDe ablation variants");
  for (auto* sc : {pre, train, abl}) {
    sc->add_option("--config", config_path, "Experiment config")->required();
    sc->add_option("--out", out, "Output root (default: config output_dir)");
    sc->add_option("--seeds", seeds, "Seed list (default: config seeds)")->delimiter(',');
    sc->add_flag("--overwrite", overwrite, "Replace existing outputs");
    sc->add_option("--workers", workers, "Worker threads (fallback: DICODE_WORKERS)");
  }
  for (auto* sc : {train, abl}) sc->add_option("--prior", prior, "Prior checkpoint (default: <out>/prior/denoiser.ckpt)");
  train->add_option("--method", methods, "dicode, fixed, dr, rl, dicode-descent, dicode-sampling, dicode-add, dicode-mc")
      ->delimiter(',');
  train->add_flag("--resume", resume, "Continue from the last checkpoint");

  auto* ev = app.add_subcommand("evaluate", "Evaluate trained policies");
  ev->add_option("runs", dirs, "Run directories")->required();
  ev->add_option("--designs", designs, "Designs per evaluation")->default_val(16);
  ev->add_option("--episodes", episodes, "Episodes per design")->default_val(4);
  ev->add_option("--workers", workers);

  auto* pl = app.add_subcommand("plot", "Training curves, design heatmaps or sampler value bars");
  pl->add_option("--kind", kind, "curves | heatmap | method_bars")->required();
  pl->add_option("runs", dirs, "Run directories")->required();
  pl->add_option("--out", out, "Output stem (writes .svg and .ppm)");
  pl->add_option("--prior", prior);
  pl->add_option("--last", last, "Designs per run for heatmaps")->default_val(100);
  pl->add_option("--workers", workers);
  pl->add_flag("--overwrite", overwrite);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }
  (void)method;

  try {
    workers = resolve_workers(workers);
    if (*init) return cmd_init(scenario_id, out, overwrite);
    if (*ev) return cmd_evaluate(dirs, designs, episodes, workers);
    if (*pl) return cmd_plot(kind, dirs, out, overwrite, prior, last, workers);

    auto cfg = codesign::ExperimentConfig::load(config_path);
    if (!seeds.empty()) cfg.seeds = seeds;
    if (*pre) return cmd_pretrain(cfg, out, overwrite);
    if (*train) {
      if (methods.empty()) methods = {"dicode"};
      for (const auto& m : methods) codesign::method_from_name(m);
      return cmd_train(cfg, methods, cfg.seeds, out, prior, workers, overwrite, resume);
    }
    if (*abl) return cmd_ablate(cfg, cfg.seeds, out, prior, workers, overwrite);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
