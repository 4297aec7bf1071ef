#include "pnax/inference.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "pnax/errors.hpp"

namespace pnax {

namespace {

std::uint8_t requantize(std::int64_t acc, double multiplier, std::uint8_t zero_point) {
    check_internal(acc >= INT32_MIN && acc <= INT32_MAX, "conv accumulator exceeds 32-bit range");
    const double v = std::round(multiplier * static_cast<double>(acc)) + zero_point;
    return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

}  // namespace

QuantTensor conv2d_approx(const QuantTensor& input, const Conv2dLayer& layer,
                          const CompiledLayerModes& modes) {
    const int C = input.shape.at(0), H = input.shape.at(1), W = input.shape.at(2);
    if (C != layer.in_channels) throw input_error("conv2d: channel mismatch");
    const int OH = (H + 2 * layer.pad_h - layer.kh) / layer.stride_h + 1;
    const int OW = (W + 2 * layer.pad_w - layer.kw) / layer.stride_w + 1;
    const int positions = layer.in_channels * layer.kh * layer.kw;
    if (modes.filters != layer.out_channels || modes.positions != positions)
        throw input_error("conv2d: assignment slice does not match layer geometry");

    QuantTensor out;
    out.shape = {layer.out_channels, OH, OW};
    out.q = layer.out;
    out.data.resize(static_cast<std::size_t>(layer.out_channels) * OH * OW);

    const std::uint8_t* in = input.data.data();
    const std::uint8_t za = input.q.zero_point;
    const std::uint8_t zw = layer.weights.q.zero_point;
    const double m = layer.weights.q.scale * input.q.scale / layer.out.scale;
    const std::int64_t zz = static_cast<std::int64_t>(positions) * zw * za;

    for (int oc = 0; oc < layer.out_channels; ++oc) {
        const std::uint8_t* wrow =
            layer.weights.data.data() + static_cast<std::size_t>(oc) * positions;
        const std::uint8_t* am = modes.and_mask.data() + static_cast<std::size_t>(oc) * positions;
        const std::uint8_t* om = modes.or_mask.data() + static_cast<std::size_t>(oc) * positions;
        const std::int64_t sum_w = layer.weight_sums[oc];
        std::uint8_t* orow = out.data.data() + static_cast<std::size_t>(oc) * OH * OW;
        for (int oy = 0; oy < OH; ++oy) {
            for (int ox = 0; ox < OW; ++ox) {
                std::int64_t cross = 0;
                std::int64_t sum_a = 0;
                int idx = 0;
                for (int ic = 0; ic < layer.in_channels; ++ic) {
                    const std::uint8_t* plane = in + static_cast<std::size_t>(ic) * H * W;
                    for (int ky = 0; ky < layer.kh; ++ky) {
                        const int iy = oy * layer.stride_h + ky - layer.pad_h;
                        for (int kx = 0; kx < layer.kw; ++kx, ++idx) {
                            const int ix = ox * layer.stride_w + kx - layer.pad_w;
                            // padding carries the activation zero point (real 0)
                            const std::uint8_t a = (iy >= 0 && iy < H && ix >= 0 && ix < W)
                                                       ? plane[iy * W + ix]
                                                       : za;
                            cross += static_cast<std::int64_t>(wrow[idx]) *
                                     static_cast<std::uint8_t>((a & am[idx]) | om[idx]);
                            sum_a += a;
                        }
                    }
                }
                const std::int64_t acc =
                    cross - static_cast<std::int64_t>(zw) * sum_a - static_cast<std::int64_t>(za) * sum_w +
                    zz + layer.bias[oc];
                orow[oy * OW + ox] = requantize(acc, m, layer.out.zero_point);
            }
        }
    }
    return out;
}

QuantTensor fc_approx(const QuantTensor& input, const FcLayer& layer,
                      const CompiledLayerModes& modes) {
    if (input.element_count() != layer.in_features)
        throw input_error("fc: input size mismatch");
    if (modes.filters != layer.out_features || modes.positions != layer.in_features)
        throw input_error("fc: assignment slice does not match layer geometry");

    QuantTensor out;
    out.shape = {layer.out_features, 1, 1};
    out.q = layer.out;
    out.data.resize(layer.out_features);

    const std::uint8_t* in = input.data.data();
    const std::uint8_t za = input.q.zero_point;
    const std::uint8_t zw = layer.weights.q.zero_point;
    const double m = layer.weights.q.scale * input.q.scale / layer.out.scale;

    std::int64_t sum_a = 0;
    for (int i = 0; i < layer.in_features; ++i) sum_a += in[i];
    const std::int64_t zz = static_cast<std::int64_t>(layer.in_features) * zw * za;

    for (int of = 0; of < layer.out_features; ++of) {
        const std::uint8_t* wrow =
            layer.weights.data.data() + static_cast<std::size_t>(of) * layer.in_features;
        const std::uint8_t* am =
            modes.and_mask.data() + static_cast<std::size_t>(of) * layer.in_features;
        const std::uint8_t* om =
            modes.or_mask.data() + static_cast<std::size_t>(of) * layer.in_features;
        std::int64_t cross = 0;
        for (int i = 0; i < layer.in_features; ++i) {
            cross += static_cast<std::int64_t>(wrow[i]) *
                     static_cast<std::uint8_t>((in[i] & am[i]) | om[i]);
        }
        const std::int64_t acc = cross - static_cast<std::int64_t>(zw) * sum_a -
                                 static_cast<std::int64_t>(za) * layer.weight_sums[of] + zz +
                                 layer.bias[of];
        out.data[of] = requantize(acc, m, layer.out.zero_point);
    }
    return out;
}

QuantTensor relu_quant(const QuantTensor& input) {
    QuantTensor out = input;
    const std::uint8_t zp = input.q.zero_point;
    for (auto& v : out.data) v = std::max(v, zp);
    return out;
}

QuantTensor pool_quant(const QuantTensor& input, const PoolLayer& layer) {
    const int C = input.shape.at(0), H = input.shape.at(1), W = input.shape.at(2);
    const int OH = (H - layer.kh) / layer.stride_h + 1;
    const int OW = (W - layer.kw) / layer.stride_w + 1;
    QuantTensor out;
    out.shape = {C, OH, OW};
    out.q = input.q;
    out.data.resize(static_cast<std::size_t>(C) * OH * OW);
    const int window = layer.kh * layer.kw;
    for (int c = 0; c < C; ++c) {
        const std::uint8_t* plane = input.data.data() + static_cast<std::size_t>(c) * H * W;
        std::uint8_t* oplane = out.data.data() + static_cast<std::size_t>(c) * OH * OW;
        for (int oy = 0; oy < OH; ++oy) {
            for (int ox = 0; ox < OW; ++ox) {
                if (layer.kind == PoolKind::Max) {
                    std::uint8_t best = 0;
                    for (int ky = 0; ky < layer.kh; ++ky)
                        for (int kx = 0; kx < layer.kw; ++kx)
                            best = std::max(
                                best, plane[(oy * layer.stride_h + ky) * W + ox * layer.stride_w + kx]);
                    oplane[oy * OW + ox] = best;
                } else {
                    std::int32_t sum = 0;
                    for (int ky = 0; ky < layer.kh; ++ky)
                        for (int kx = 0; kx < layer.kw; ++kx)
                            sum += plane[(oy * layer.stride_h + ky) * W + ox * layer.stride_w + kx];
                    // round half away from zero; sums are non-negative
                    oplane[oy * OW + ox] = static_cast<std::uint8_t>((2 * sum + window) / (2 * window));
                }
            }
        }
    }
    return out;
}

namespace {

InferenceResult finish(const QuantTensor& logits_q) {
    InferenceResult r;
    r.logits.resize(logits_q.data.size());
    for (std::size_t i = 0; i < logits_q.data.size(); ++i) r.logits[i] = logits_q.dequant(i);
    int best = 0;
    for (int i = 1; i < static_cast<int>(logits_q.data.size()); ++i)
        if (logits_q.data[i] > logits_q.data[best]) best = i;  // ties: lowest index
    r.class_index = best;
    return r;
}

QuantTensor forward(const QuantModel& model, const QuantTensor& input,
                    const CompiledAssignment& compiled, std::vector<QuantTensor>* trace) {
    QuantTensor t = input;
    static const CompiledLayerModes kNoModes{};
    for (int i = 0; i < static_cast<int>(model.layers.size()); ++i) {
        const Layer& layer = model.layers[i];
        if (const auto* conv = std::get_if<Conv2dLayer>(&layer)) {
            const CompiledLayerModes* lm = compiled.find(i);
            check_internal(lm != nullptr, "missing compiled modes for conv layer");
            t = conv2d_approx(t, *conv, *lm);
        } else if (const auto* fc = std::get_if<FcLayer>(&layer)) {
            const CompiledLayerModes* lm = compiled.find(i);
            check_internal(lm != nullptr, "missing compiled modes for fc layer");
            QuantTensor flat = t;
            flat.shape = {fc->in_features, 1, 1};
            t = fc_approx(flat, *fc, *lm);
        } else if (const auto* pool = std::get_if<PoolLayer>(&layer)) {
            t = pool_quant(t, *pool);
        } else if (std::holds_alternative<ReluLayer>(layer)) {
            t = relu_quant(t);
        } else {
            // argmax head is handled by the caller on the final tensor
        }
        if (trace) trace->push_back(t);
    }
    return t;
}

}  // namespace

InferenceResult run_inference(const QuantModel& model, const QuantTensor& input,
                              const CompiledAssignment& compiled) {
    if (input.shape != model.input_shape) throw input_error("input shape does not match model");
    return finish(forward(model, input, compiled, nullptr));
}

InferenceResult run_inference(const QuantModel& model, const QuantTensor& input,
                              const ModeAssignment& assignment) {
    return run_inference(model, input, compile_assignment(model, assignment));
}

std::vector<QuantTensor> run_inference_trace(const QuantModel& model, const QuantTensor& input,
                                             const CompiledAssignment& compiled) {
    if (input.shape != model.input_shape) throw input_error("input shape does not match model");
    std::vector<QuantTensor> trace;
    forward(model, input, compiled, &trace);
    return trace;
}

QuantTensor make_input(const QuantModel& model, const Dataset& dataset, int index) {
    if (index < 0 || index >= dataset.count) throw input_error("dataset index out of range");
    if (model.input_shape.size() != 3 || model.input_shape[0] != 1 ||
        model.input_shape[1] != dataset.rows || model.input_shape[2] != dataset.cols)
        throw input_error("dataset image shape does not match model input");
    QuantTensor t;
    t.shape = model.input_shape;
    t.q = model.input_q;
    const std::uint8_t* img = dataset.image(index);
    t.data.assign(img, img + static_cast<std::size_t>(dataset.rows) * dataset.cols);
    return t;
}

EvalResult evaluate_accuracy(const QuantModel& model, const Dataset& dataset,
                             const CompiledAssignment& compiled,
                             const std::vector<int>& subset_indices, int workers) {
    if (subset_indices.empty()) throw input_error("evaluation subset is empty");
    EvalResult result;
    result.n = static_cast<int>(subset_indices.size());
    result.predictions.assign(subset_indices.size(), -1);

    auto run_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            const QuantTensor input = make_input(model, dataset, subset_indices[k]);
            result.predictions[k] =
                static_cast<std::int16_t>(run_inference(model, input, compiled).class_index);
        }
    };

    workers = std::max(1, workers);
    if (workers == 1 || subset_indices.size() < 2) {
        run_range(0, subset_indices.size());
    } else {
        const std::size_t n = subset_indices.size();
        const std::size_t nw = std::min<std::size_t>(workers, n);
        std::vector<std::thread> pool;
        pool.reserve(nw);
        for (std::size_t t = 0; t < nw; ++t) {
            const std::size_t begin = n * t / nw;
            const std::size_t end = n * (t + 1) / nw;
            pool.emplace_back(run_range, begin, end);
        }
        for (auto& th : pool) th.join();
    }

    for (std::size_t k = 0; k < subset_indices.size(); ++k)
        if (result.predictions[k] == dataset.labels[subset_indices[k]]) ++result.correct;
    result.accuracy = static_cast<double>(result.correct) / static_cast<double>(result.n);
    return result;
}

EvalResult evaluate_accuracy(const QuantModel& model, const Dataset& dataset,
                             const ModeAssignment& assignment, int subset_size, std::uint32_t seed,
                             int workers) {
    const auto subset = select_subset(dataset.count, subset_size, seed);
    return evaluate_accuracy(model, dataset, compile_assignment(model, assignment), subset,
                             workers);
}

}  // namespace pnax
