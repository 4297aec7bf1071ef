#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pnax/multiplier.hpp"
#include "pnax/rational.hpp"

namespace pnax {

struct WeightedMode {
    std::uint8_t weight;
    ApproxMode mode;
};

using WeightedModeList = std::vector<WeightedMode>;

// Mean of the accumulated convolution error sum_i eps_i under uniform
// activations: sum_i s_i * (2^{z_i}-1)/2 * W_i. ZE entries contribute 0.
Rat conv_error_mean(const WeightedModeList& wml);

// Variance of the accumulated error. Residues of distinct multipliers are
// uncorrelated, so no covariance terms: sum_i (2^{2 z_i}-1)/12 * W_i^2.
Rat conv_error_variance(const WeightedModeList& wml);

struct EmpiricalMoments {
    Rat mean;
    Rat variance;  // population variance (divide by N), so exhaustive
                   // enumeration reproduces the analytical value exactly
};

// Sample moments of sum_i eps_i over the given activation vectors. Each
// vector must have one activation per list entry.
EmpiricalMoments empirical_conv_error(const WeightedModeList& wml,
                                      std::span<const std::vector<std::uint8_t>> activations);

}  // namespace pnax
