#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace pnax {

struct QuantParams {
    double scale = 1.0;
    std::uint8_t zero_point = 0;
};

struct QuantTensor {
    std::vector<int> shape;
    std::vector<std::uint8_t> data;
    QuantParams q;

    std::int64_t element_count() const {
        std::int64_t n = 1;
        for (int d : shape) n *= d;
        return n;
    }
    double dequant(std::size_t i) const {
        return q.scale * (static_cast<int>(data[i]) - static_cast<int>(q.zero_point));
    }
};

struct Conv2dLayer {
    int in_channels = 0, out_channels = 0;
    int kh = 0, kw = 0;
    int stride_h = 1, stride_w = 1;
    int pad_h = 0, pad_w = 0;
    QuantTensor weights;  // [out_channels, in_channels, kh, kw]
    std::vector<std::int32_t> bias;
    QuantParams out;
    std::vector<std::int64_t> weight_sums;  // per filter, derived on load
};

struct FcLayer {
    int in_features = 0, out_features = 0;
    QuantTensor weights;  // [out_features, in_features]
    std::vector<std::int32_t> bias;
    QuantParams out;
    std::vector<std::int64_t> weight_sums;
};

enum class PoolKind { Max, Avg };

struct PoolLayer {
    PoolKind kind = PoolKind::Max;
    int kh = 2, kw = 2;
    int stride_h = 2, stride_w = 2;
};

struct ReluLayer {};

struct ArgmaxLayer {};

using Layer = std::variant<Conv2dLayer, FcLayer, PoolLayer, ReluLayer, ArgmaxLayer>;

struct QuantModel {
    std::string name;
    std::vector<int> input_shape;  // [channels, height, width]
    QuantParams input_q;
    std::vector<Layer> layers;
};

// A layer that takes per-weight multiplier modes (conv or fc).
struct ApproxLayerRef {
    int layer_index;       // index into QuantModel::layers
    int filters;           // conv: out_channels, fc: out_features
    int positions;         // weights per filter
    const QuantTensor* weights;
};

std::vector<ApproxLayerRef> approximable_layers(const QuantModel& model);

// Float-side description used as quantization input. Calibration ranges come
// from the producer (see tools/fixtures).
struct FloatTensor {
    std::vector<int> shape;
    std::vector<float> data;
};

struct FloatConv2d {
    int in_channels = 0, out_channels = 0;
    int kh = 0, kw = 0;
    int stride_h = 1, stride_w = 1;
    int pad_h = 0, pad_w = 0;
    FloatTensor weights;
    std::vector<float> bias;
    std::array<double, 2> out_range{0.0, 0.0};
};

struct FloatFc {
    int in_features = 0, out_features = 0;
    FloatTensor weights;
    std::vector<float> bias;
    std::array<double, 2> out_range{0.0, 0.0};
};

using FloatLayer = std::variant<FloatConv2d, FloatFc, PoolLayer, ReluLayer, ArgmaxLayer>;

struct FloatModel {
    std::string name;
    std::vector<int> input_shape;
    std::array<double, 2> input_range{0.0, 1.0};
    std::vector<FloatLayer> layers;
};

// Manifest + sidecar payload IO (formats documented in docs/formats.md).
QuantModel load_quant_model(const std::filesystem::path& manifest_path);
void save_quant_model(const QuantModel& model, const std::filesystem::path& manifest_path);
FloatModel load_float_model(const std::filesystem::path& manifest_path);

// Validates shape compatibility along the layer chain; throws schema_error.
void validate_model(const QuantModel& model);

}  // namespace pnax
