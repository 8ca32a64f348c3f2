#pragma once

#include <string>

#include "dicode/diffusion/denoiser.hpp"
#include "dicode/diffusion/schedule.hpp"

namespace dicode::diffusion {

inline constexpr const char* kDenoiserMagic = "DICODE-DIFF-v1";

struct DenoiserCheckpoint {
  MlpDenoiser denoiser;
  NoiseSchedule schedule;
  std::string scenario_id;
};

/// First line is the magic string; the second is a JSON record with the
/// network, (T, beta_start, beta_end) and the scenario id.
void save_denoiser(const std::string& path, const MlpDenoiser& d, const NoiseSchedule& s,
                   const std::string& scenario_id);
DenoiserCheckpoint load_denoiser(const std::string& path);

}  // namespace dicode::diffusion
