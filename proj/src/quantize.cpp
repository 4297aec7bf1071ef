#include "pnax/quantize.hpp"

#include <algorithm>
#include <cmath>

#include "pnax/errors.hpp"

namespace pnax {

QuantParams affine_params(double lo, double hi) {
    if (!(lo <= hi)) throw config_error("calibration range has min > max");
    QuantParams q;
    if (lo == hi) {
        q.scale = 1.0;  // constant-tensor fallback
    } else {
        q.scale = (hi - lo) / 255.0;
    }
    const double zp = std::round(-lo / q.scale);
    q.zero_point = static_cast<std::uint8_t>(std::clamp(zp, 0.0, 255.0));
    return q;
}

std::uint8_t quantize_value(double x, const QuantParams& q) {
    const double v = std::round(x / q.scale) + q.zero_point;
    return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

namespace {

QuantTensor quantize_tensor(const FloatTensor& t) {
    if (t.data.empty()) throw config_error("cannot quantize empty tensor");
    const auto [lo_it, hi_it] = std::minmax_element(t.data.begin(), t.data.end());
    QuantTensor out;
    out.shape = t.shape;
    out.q = affine_params(*lo_it, *hi_it);
    out.data.resize(t.data.size());
    for (std::size_t i = 0; i < t.data.size(); ++i)
        out.data[i] = quantize_value(t.data[i], out.q);
    return out;
}

std::vector<std::int32_t> quantize_bias(const std::vector<float>& bias, double scale_w,
                                        double scale_in) {
    std::vector<std::int32_t> out(bias.size());
    const double s = scale_w * scale_in;
    for (std::size_t i = 0; i < bias.size(); ++i)
        out[i] = static_cast<std::int32_t>(std::llround(bias[i] / s));
    return out;
}

std::vector<std::int64_t> filter_sums(const QuantTensor& w, int filters) {
    const int positions = static_cast<int>(w.data.size()) / filters;
    std::vector<std::int64_t> sums(filters, 0);
    for (int f = 0; f < filters; ++f) {
        std::int64_t s = 0;
        for (int p = 0; p < positions; ++p) s += w.data[static_cast<std::size_t>(f) * positions + p];
        sums[f] = s;
    }
    return sums;
}

}  // namespace

QuantModel quantize_model(const FloatModel& fm) {
    QuantModel qm;
    qm.name = fm.name;
    qm.input_shape = fm.input_shape;
    qm.input_q = affine_params(fm.input_range[0], fm.input_range[1]);

    // Activation params flow through the layer chain; relu and pooling reuse
    // the incoming params.
    QuantParams act = qm.input_q;
    for (const FloatLayer& fl : fm.layers) {
        if (const auto* conv = std::get_if<FloatConv2d>(&fl)) {
            Conv2dLayer out;
            out.in_channels = conv->in_channels;
            out.out_channels = conv->out_channels;
            out.kh = conv->kh, out.kw = conv->kw;
            out.stride_h = conv->stride_h, out.stride_w = conv->stride_w;
            out.pad_h = conv->pad_h, out.pad_w = conv->pad_w;
            out.weights = quantize_tensor(conv->weights);
            out.bias = quantize_bias(conv->bias, out.weights.q.scale, act.scale);
            out.out = affine_params(conv->out_range[0], conv->out_range[1]);
            out.weight_sums = filter_sums(out.weights, out.out_channels);
            act = out.out;
            qm.layers.emplace_back(std::move(out));
        } else if (const auto* fc = std::get_if<FloatFc>(&fl)) {
            FcLayer out;
            out.in_features = fc->in_features;
            out.out_features = fc->out_features;
            out.weights = quantize_tensor(fc->weights);
            out.bias = quantize_bias(fc->bias, out.weights.q.scale, act.scale);
            out.out = affine_params(fc->out_range[0], fc->out_range[1]);
            out.weight_sums = filter_sums(out.weights, out.out_features);
            act = out.out;
            qm.layers.emplace_back(std::move(out));
        } else if (const auto* pool = std::get_if<PoolLayer>(&fl)) {
            qm.layers.emplace_back(*pool);
        } else if (std::holds_alternative<ReluLayer>(fl)) {
            qm.layers.emplace_back(ReluLayer{});
        } else {
            qm.layers.emplace_back(ArgmaxLayer{});
        }
    }
    validate_model(qm);
    return qm;
}

}  // namespace pnax
