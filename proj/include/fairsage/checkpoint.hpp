#pragma once

#include <string>

#include "fairsage/model.hpp"

namespace fairsage {

struct Checkpoint {
    ModelConfig config;
    ModelParams params;
};

// Writes <dir>/manifest.txt (config as key=value lines) and <dir>/params.bin
// (per parameter: name, shape, little-endian f64 data, in ParamSet order).
void save_checkpoint(const std::string& dir, const ModelConfig& cfg, const ModelParams& params);

// Rejects manifests that disagree with the stored tensors.
Checkpoint load_checkpoint(const std::string& dir);

}  // namespace fairsage
