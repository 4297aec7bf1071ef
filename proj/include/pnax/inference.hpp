#pragma once

#include <cstdint>
#include <vector>

#include "pnax/assignment.hpp"
#include "pnax/dataset.hpp"
#include "pnax/model.hpp"

namespace pnax {

// Raw-operand cross term q_w * q_a runs through the per-weight approximate
// multiplier; zero-point corrections, bias and requantization are exact.
// Accumulation is 32-bit signed (carried in 64 bits, range-asserted).
QuantTensor conv2d_approx(const QuantTensor& input, const Conv2dLayer& layer,
                          const CompiledLayerModes& modes);

QuantTensor fc_approx(const QuantTensor& input, const FcLayer& layer,
                      const CompiledLayerModes& modes);

QuantTensor relu_quant(const QuantTensor& input);
QuantTensor pool_quant(const QuantTensor& input, const PoolLayer& layer);

struct InferenceResult {
    int class_index = -1;
    std::vector<double> logits;  // dequantized final fc outputs
};

InferenceResult run_inference(const QuantModel& model, const QuantTensor& input,
                              const CompiledAssignment& compiled);

InferenceResult run_inference(const QuantModel& model, const QuantTensor& input,
                              const ModeAssignment& assignment);

// Per-layer outputs (input excluded), for golden-activation checks.
std::vector<QuantTensor> run_inference_trace(const QuantModel& model, const QuantTensor& input,
                                             const CompiledAssignment& compiled);

QuantTensor make_input(const QuantModel& model, const Dataset& dataset, int index);

struct EvalResult {
    int n = 0;
    int correct = 0;
    double accuracy = 0.0;
    std::vector<std::int16_t> predictions;  // aligned with the subset order
};

// Top-1 accuracy over dataset[subset]. Images are evaluated independently,
// so the result does not depend on worker count.
EvalResult evaluate_accuracy(const QuantModel& model, const Dataset& dataset,
                             const CompiledAssignment& compiled,
                             const std::vector<int>& subset_indices, int workers);

EvalResult evaluate_accuracy(const QuantModel& model, const Dataset& dataset,
                             const ModeAssignment& assignment, int subset_size,
                             std::uint32_t seed, int workers);

}  // namespace pnax
