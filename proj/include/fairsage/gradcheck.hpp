#pragma once

#include <cstddef>
#include <cstdint>

#include "fairsage/model.hpp"

namespace fairsage {

// Compares reverse-mode gradients against central finite differences on
// `points` independently seeded random problems (fresh graph, features,
// labels, and parameters each). Returns the worst relative error seen.
// Dropout is forced off so the loss is a deterministic function of params.
double model_grad_max_rel_error(const ModelConfig& base, std::uint64_t seed, std::size_t points);

}  // namespace fairsage
