#pragma once

#include <cstdint>

#include "pnax/model.hpp"

namespace pnax {

// Per-tensor affine parameters for real values in [lo, hi], mapped onto
// [0,255]: q = clamp(round(x/scale) + zero_point). Rounding is
// half-away-from-zero throughout. A degenerate range (lo == hi) falls back to
// scale 1.
QuantParams affine_params(double lo, double hi);

std::uint8_t quantize_value(double x, const QuantParams& q);

// 8-bit post-training quantization of a calibrated float model: weights use
// their own min/max per tensor, activations use the recorded calibration
// ranges, biases are quantized to 32-bit at scale_w * scale_in.
QuantModel quantize_model(const FloatModel& fm);

}  // namespace pnax
