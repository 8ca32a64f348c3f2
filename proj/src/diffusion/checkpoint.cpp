#include "dicode/diffusion/checkpoint.hpp"

#include <fstream>

#include "dicode/core/errors.hpp"

namespace dicode::diffusion {

void save_denoiser(const std::string& path, const MlpDenoiser& d, const NoiseSchedule& s,
                   const std::string& scenario_id) {
  const auto linear = s.linear_endpoints();
  if (!linear) throw InvalidArgument("save_denoiser: only linear schedules are checkpointed");
  nlohmann::json record{{"scenario_id", scenario_id},
                        {"schedule", {{"T", s.T()}, {"beta_start", linear->first}, {"beta_end", linear->second}}},
                        {"denoiser", d.to_json()}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("save_denoiser: cannot open " + path);
  out << kDenoiserMagic << '\n' << record.dump() << '\n';
  if (!out) throw std::runtime_error("save_denoiser: write failed for " + path);
}

DenoiserCheckpoint load_denoiser(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_denoiser: cannot open " + path);
  std::string magic, body;
  std::getline(in, magic);
  if (magic != kDenoiserMagic) throw InvalidArgument("load_denoiser: bad header in " + path);
  std::getline(in, body);
  const auto record = nlohmann::json::parse(body);
  const auto& sch = record.at("schedule");
  return DenoiserCheckpoint{MlpDenoiser::from_json(record.at("denoiser")),
                            make_schedule(sch.at("T").get<int>(), sch.at("beta_start").get<double>(),
                                          sch.at("beta_end").get<double>()),
                            record.at("scenario_id").get<std::string>()};
}

}  // namespace dicode::diffusion
