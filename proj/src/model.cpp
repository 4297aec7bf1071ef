#include "pnax/model.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>
#include <numeric>

#include "pnax/errors.hpp"

namespace pnax {

using nlohmann::json;

namespace {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open file: " + path.string());
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                     std::istreambuf_iterator<char>());
}

json load_manifest(const std::filesystem::path& path, const std::string& expected_format) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open model manifest: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw schema_error("malformed JSON in " + path.string() + ": " + e.what());
    }
    if (!j.is_object() || j.value("format", "") != expected_format)
        throw schema_error(path.string() + ": expected format '" + expected_format + "'");
    if (j.value("version", 0) != 1)
        throw schema_error(path.string() + ": unsupported manifest version");
    return j;
}

template <typename T>
T get_field(const json& j, const std::string& key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) throw schema_error(where + ": missing field '" + key + "'");
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw schema_error(where + ": bad value for field '" + key + "'");
    }
}

QuantParams parse_qparams(const json& j, const std::string& where) {
    QuantParams q;
    q.scale = get_field<double>(j, "scale", where);
    int zp = get_field<int>(j, "zero_point", where);
    if (q.scale <= 0) throw schema_error(where + ": scale must be positive");
    if (zp < 0 || zp > 255) throw schema_error(where + ": zero_point out of [0,255]");
    q.zero_point = static_cast<std::uint8_t>(zp);
    return q;
}

// Payload slices are byte-addressed; multi-byte values are little-endian.
std::vector<std::uint8_t> slice_u8(const std::vector<std::uint8_t>& payload, std::int64_t offset,
                                   std::int64_t count, const std::string& where) {
    if (offset < 0 || count < 0 ||
        offset + count > static_cast<std::int64_t>(payload.size()))
        throw schema_error(where + ": payload slice out of range");
    return std::vector<std::uint8_t>(payload.begin() + offset, payload.begin() + offset + count);
}

std::vector<std::int32_t> slice_i32(const std::vector<std::uint8_t>& payload, std::int64_t offset,
                                    std::int64_t count, const std::string& where) {
    if (offset < 0 || count < 0 ||
        offset + 4 * count > static_cast<std::int64_t>(payload.size()))
        throw schema_error(where + ": payload slice out of range");
    std::vector<std::int32_t> out(count);
    for (std::int64_t i = 0; i < count; ++i) {
        const std::uint8_t* p = payload.data() + offset + 4 * i;
        out[i] = static_cast<std::int32_t>(static_cast<std::uint32_t>(p[0]) |
                                           (static_cast<std::uint32_t>(p[1]) << 8) |
                                           (static_cast<std::uint32_t>(p[2]) << 16) |
                                           (static_cast<std::uint32_t>(p[3]) << 24));
    }
    return out;
}

std::vector<float> slice_f32(const std::vector<std::uint8_t>& payload, std::int64_t offset,
                             std::int64_t count, const std::string& where) {
    std::vector<std::int32_t> raw = slice_i32(payload, offset, count, where);
    std::vector<float> out(count);
    for (std::int64_t i = 0; i < count; ++i) {
        float f;
        static_assert(sizeof(float) == 4);
        std::memcpy(&f, &raw[i], 4);
        out[i] = f;
    }
    return out;
}

std::vector<std::int64_t> filter_sums(const QuantTensor& w, int filters, int positions) {
    std::vector<std::int64_t> sums(filters, 0);
    for (int f = 0; f < filters; ++f) {
        std::int64_t s = 0;
        for (int p = 0; p < positions; ++p) s += w.data[static_cast<std::size_t>(f) * positions + p];
        sums[f] = s;
    }
    return sums;
}

}  // namespace

std::vector<ApproxLayerRef> approximable_layers(const QuantModel& model) {
    std::vector<ApproxLayerRef> out;
    for (int i = 0; i < static_cast<int>(model.layers.size()); ++i) {
        if (const auto* conv = std::get_if<Conv2dLayer>(&model.layers[i])) {
            out.push_back({i, conv->out_channels, conv->in_channels * conv->kh * conv->kw,
                           &conv->weights});
        } else if (const auto* fc = std::get_if<FcLayer>(&model.layers[i])) {
            out.push_back({i, fc->out_features, fc->in_features, &fc->weights});
        }
    }
    return out;
}

QuantModel load_quant_model(const std::filesystem::path& manifest_path) {
    json j = load_manifest(manifest_path, "pnax-quant-model");
    const std::string payload_name = get_field<std::string>(j, "payload", manifest_path.string());
    auto payload = read_file_bytes(manifest_path.parent_path() / payload_name);

    QuantModel model;
    model.name = j.value("name", manifest_path.stem().string());
    const json& input = j.at("input");
    model.input_shape = get_field<std::vector<int>>(input, "shape", "input");
    model.input_q = parse_qparams(input, "input");

    int index = 0;
    for (const json& lj : j.at("layers")) {
        const std::string where = "layer " + std::to_string(index);
        const std::string kind = get_field<std::string>(lj, "kind", where);
        if (kind == "conv2d") {
            Conv2dLayer conv;
            conv.in_channels = get_field<int>(lj, "in_channels", where);
            conv.out_channels = get_field<int>(lj, "out_channels", where);
            auto kernel = get_field<std::vector<int>>(lj, "kernel", where);
            auto stride = get_field<std::vector<int>>(lj, "stride", where);
            auto padding = get_field<std::vector<int>>(lj, "padding", where);
            if (kernel.size() != 2 || stride.size() != 2 || padding.size() != 2)
                throw schema_error(where + ": kernel/stride/padding must have 2 entries");
            conv.kh = kernel[0], conv.kw = kernel[1];
            conv.stride_h = stride[0], conv.stride_w = stride[1];
            conv.pad_h = padding[0], conv.pad_w = padding[1];
            const json& wj = lj.at("weights");
            const std::int64_t count = conv.out_channels * conv.in_channels * conv.kh * conv.kw;
            if (get_field<std::int64_t>(wj, "count", where) != count)
                throw schema_error(where + ": weight count does not match geometry");
            conv.weights.shape = {conv.out_channels, conv.in_channels, conv.kh, conv.kw};
            conv.weights.data =
                slice_u8(payload, get_field<std::int64_t>(wj, "offset", where), count, where);
            conv.weights.q = parse_qparams(wj, where + " weights");
            const json& bj = lj.at("bias");
            if (get_field<std::int64_t>(bj, "count", where) != conv.out_channels)
                throw schema_error(where + ": bias count != out_channels");
            conv.bias = slice_i32(payload, get_field<std::int64_t>(bj, "offset", where),
                                  conv.out_channels, where);
            conv.out = parse_qparams(lj.at("out"), where + " out");
            conv.weight_sums =
                filter_sums(conv.weights, conv.out_channels, conv.in_channels * conv.kh * conv.kw);
            model.layers.emplace_back(std::move(conv));
        } else if (kind == "fc") {
            FcLayer fc;
            fc.in_features = get_field<int>(lj, "in_features", where);
            fc.out_features = get_field<int>(lj, "out_features", where);
            const json& wj = lj.at("weights");
            const std::int64_t count =
                static_cast<std::int64_t>(fc.in_features) * fc.out_features;
            if (get_field<std::int64_t>(wj, "count", where) != count)
                throw schema_error(where + ": weight count does not match geometry");
            fc.weights.shape = {fc.out_features, fc.in_features};
            fc.weights.data =
                slice_u8(payload, get_field<std::int64_t>(wj, "offset", where), count, where);
            fc.weights.q = parse_qparams(wj, where + " weights");
            const json& bj = lj.at("bias");
            if (get_field<std::int64_t>(bj, "count", where) != fc.out_features)
                throw schema_error(where + ": bias count != out_features");
            fc.bias = slice_i32(payload, get_field<std::int64_t>(bj, "offset", where),
                                fc.out_features, where);
            fc.out = parse_qparams(lj.at("out"), where + " out");
            fc.weight_sums = filter_sums(fc.weights, fc.out_features, fc.in_features);
            model.layers.emplace_back(std::move(fc));
        } else if (kind == "maxpool" || kind == "avgpool") {
            PoolLayer pool;
            pool.kind = kind == "maxpool" ? PoolKind::Max : PoolKind::Avg;
            auto kernel = get_field<std::vector<int>>(lj, "kernel", where);
            auto stride = get_field<std::vector<int>>(lj, "stride", where);
            if (kernel.size() != 2 || stride.size() != 2)
                throw schema_error(where + ": kernel/stride must have 2 entries");
            pool.kh = kernel[0], pool.kw = kernel[1];
            pool.stride_h = stride[0], pool.stride_w = stride[1];
            model.layers.emplace_back(pool);
        } else if (kind == "relu") {
            model.layers.emplace_back(ReluLayer{});
        } else if (kind == "argmax") {
            model.layers.emplace_back(ArgmaxLayer{});
        } else {
            throw schema_error(where + ": unknown layer kind '" + kind + "'");
        }
        ++index;
    }
    validate_model(model);
    return model;
}

namespace {

void append_u8(std::vector<std::uint8_t>& payload, const std::vector<std::uint8_t>& data,
               json& out) {
    out["offset"] = static_cast<std::int64_t>(payload.size());
    out["count"] = static_cast<std::int64_t>(data.size());
    payload.insert(payload.end(), data.begin(), data.end());
}

void append_i32(std::vector<std::uint8_t>& payload, const std::vector<std::int32_t>& data,
                json& out) {
    out["offset"] = static_cast<std::int64_t>(payload.size());
    out["count"] = static_cast<std::int64_t>(data.size());
    for (std::int32_t v : data) {
        auto u = static_cast<std::uint32_t>(v);
        payload.push_back(static_cast<std::uint8_t>(u & 0xFF));
        payload.push_back(static_cast<std::uint8_t>((u >> 8) & 0xFF));
        payload.push_back(static_cast<std::uint8_t>((u >> 16) & 0xFF));
        payload.push_back(static_cast<std::uint8_t>((u >> 24) & 0xFF));
    }
}

json qparams_json(const QuantParams& q) {
    return json{{"scale", q.scale}, {"zero_point", static_cast<int>(q.zero_point)}};
}

}  // namespace

void save_quant_model(const QuantModel& model, const std::filesystem::path& manifest_path) {
    std::vector<std::uint8_t> payload;
    json j;
    j["format"] = "pnax-quant-model";
    j["version"] = 1;
    j["name"] = model.name;
    const std::string payload_name = manifest_path.stem().string() + ".bin";
    j["payload"] = payload_name;
    json input = qparams_json(model.input_q);
    input["shape"] = model.input_shape;
    j["input"] = input;

    json layers = json::array();
    for (const Layer& layer : model.layers) {
        json lj;
        if (const auto* conv = std::get_if<Conv2dLayer>(&layer)) {
            lj["kind"] = "conv2d";
            lj["in_channels"] = conv->in_channels;
            lj["out_channels"] = conv->out_channels;
            lj["kernel"] = {conv->kh, conv->kw};
            lj["stride"] = {conv->stride_h, conv->stride_w};
            lj["padding"] = {conv->pad_h, conv->pad_w};
            json wj = qparams_json(conv->weights.q);
            append_u8(payload, conv->weights.data, wj);
            lj["weights"] = wj;
            json bj;
            append_i32(payload, conv->bias, bj);
            lj["bias"] = bj;
            lj["out"] = qparams_json(conv->out);
        } else if (const auto* fc = std::get_if<FcLayer>(&layer)) {
            lj["kind"] = "fc";
            lj["in_features"] = fc->in_features;
            lj["out_features"] = fc->out_features;
            json wj = qparams_json(fc->weights.q);
            append_u8(payload, fc->weights.data, wj);
            lj["weights"] = wj;
            json bj;
            append_i32(payload, fc->bias, bj);
            lj["bias"] = bj;
            lj["out"] = qparams_json(fc->out);
        } else if (const auto* pool = std::get_if<PoolLayer>(&layer)) {
            lj["kind"] = pool->kind == PoolKind::Max ? "maxpool" : "avgpool";
            lj["kernel"] = {pool->kh, pool->kw};
            lj["stride"] = {pool->stride_h, pool->stride_w};
        } else if (std::holds_alternative<ReluLayer>(layer)) {
            lj["kind"] = "relu";
        } else {
            lj["kind"] = "argmax";
        }
        layers.push_back(std::move(lj));
    }
    j["layers"] = std::move(layers);

    std::ofstream manifest_out(manifest_path);
    if (!manifest_out) throw input_error("cannot write manifest: " + manifest_path.string());
    manifest_out << j.dump(2) << "\n";
    const auto payload_path = manifest_path.parent_path() / payload_name;
    std::ofstream payload_out(payload_path, std::ios::binary);
    if (!payload_out) throw input_error("cannot write payload: " + payload_path.string());
    payload_out.write(reinterpret_cast<const char*>(payload.data()),
                      static_cast<std::streamsize>(payload.size()));
}

FloatModel load_float_model(const std::filesystem::path& manifest_path) {
    json j = load_manifest(manifest_path, "pnax-float-model");
    const std::string payload_name = get_field<std::string>(j, "payload", manifest_path.string());
    auto payload = read_file_bytes(manifest_path.parent_path() / payload_name);

    FloatModel model;
    model.name = j.value("name", manifest_path.stem().string());
    const json& input = j.at("input");
    model.input_shape = get_field<std::vector<int>>(input, "shape", "input");
    auto range = get_field<std::vector<double>>(input, "range", "input");
    if (range.size() != 2) throw schema_error("input: range must have 2 entries");
    model.input_range = {range[0], range[1]};

    int index = 0;
    for (const json& lj : j.at("layers")) {
        const std::string where = "layer " + std::to_string(index);
        const std::string kind = get_field<std::string>(lj, "kind", where);
        if (kind == "conv2d") {
            FloatConv2d conv;
            conv.in_channels = get_field<int>(lj, "in_channels", where);
            conv.out_channels = get_field<int>(lj, "out_channels", where);
            auto kernel = get_field<std::vector<int>>(lj, "kernel", where);
            auto stride = get_field<std::vector<int>>(lj, "stride", where);
            auto padding = get_field<std::vector<int>>(lj, "padding", where);
            if (kernel.size() != 2 || stride.size() != 2 || padding.size() != 2)
                throw schema_error(where + ": kernel/stride/padding must have 2 entries");
            conv.kh = kernel[0], conv.kw = kernel[1];
            conv.stride_h = stride[0], conv.stride_w = stride[1];
            conv.pad_h = padding[0], conv.pad_w = padding[1];
            const std::int64_t count = conv.out_channels * conv.in_channels * conv.kh * conv.kw;
            const json& wj = lj.at("weights");
            if (get_field<std::int64_t>(wj, "count", where) != count)
                throw schema_error(where + ": weight count does not match geometry");
            conv.weights.shape = {conv.out_channels, conv.in_channels, conv.kh, conv.kw};
            conv.weights.data =
                slice_f32(payload, get_field<std::int64_t>(wj, "offset", where), count, where);
            const json& bj = lj.at("bias");
            conv.bias = slice_f32(payload, get_field<std::int64_t>(bj, "offset", where),
                                  get_field<std::int64_t>(bj, "count", where), where);
            auto out_range = get_field<std::vector<double>>(lj, "out_range", where);
            if (out_range.size() != 2) throw schema_error(where + ": out_range needs 2 entries");
            conv.out_range = {out_range[0], out_range[1]};
            model.layers.emplace_back(std::move(conv));
        } else if (kind == "fc") {
            FloatFc fc;
            fc.in_features = get_field<int>(lj, "in_features", where);
            fc.out_features = get_field<int>(lj, "out_features", where);
            const std::int64_t count =
                static_cast<std::int64_t>(fc.in_features) * fc.out_features;
            const json& wj = lj.at("weights");
            if (get_field<std::int64_t>(wj, "count", where) != count)
                throw schema_error(where + ": weight count does not match geometry");
            fc.weights.shape = {fc.out_features, fc.in_features};
            fc.weights.data =
                slice_f32(payload, get_field<std::int64_t>(wj, "offset", where), count, where);
            const json& bj = lj.at("bias");
            fc.bias = slice_f32(payload, get_field<std::int64_t>(bj, "offset", where),
                                get_field<std::int64_t>(bj, "count", where), where);
            auto out_range = get_field<std::vector<double>>(lj, "out_range", where);
            if (out_range.size() != 2) throw schema_error(where + ": out_range needs 2 entries");
            fc.out_range = {out_range[0], out_range[1]};
            model.layers.emplace_back(std::move(fc));
        } else if (kind == "maxpool" || kind == "avgpool") {
            PoolLayer pool;
            pool.kind = kind == "maxpool" ? PoolKind::Max : PoolKind::Avg;
            auto kernel = get_field<std::vector<int>>(lj, "kernel", where);
            auto stride = get_field<std::vector<int>>(lj, "stride", where);
            pool.kh = kernel.at(0), pool.kw = kernel.at(1);
            pool.stride_h = stride.at(0), pool.stride_w = stride.at(1);
            model.layers.emplace_back(pool);
        } else if (kind == "relu") {
            model.layers.emplace_back(ReluLayer{});
        } else if (kind == "argmax") {
            model.layers.emplace_back(ArgmaxLayer{});
        } else {
            throw schema_error(where + ": unknown layer kind '" + kind + "'");
        }
        ++index;
    }
    return model;
}

void validate_model(const QuantModel& model) {
    if (model.input_shape.size() != 3)
        throw schema_error("model input shape must be [channels, height, width]");
    int c = model.input_shape[0], h = model.input_shape[1], w = model.input_shape[2];
    bool flattened = false;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const std::string where = "layer " + std::to_string(i);
        if (const auto* conv = std::get_if<Conv2dLayer>(&model.layers[i])) {
            if (flattened) throw schema_error(where + ": conv2d after flatten");
            if (conv->in_channels != c)
                throw schema_error(where + ": in_channels " + std::to_string(conv->in_channels) +
                                   " != incoming channels " + std::to_string(c));
            int oh = (h + 2 * conv->pad_h - conv->kh) / conv->stride_h + 1;
            int ow = (w + 2 * conv->pad_w - conv->kw) / conv->stride_w + 1;
            if (oh <= 0 || ow <= 0) throw schema_error(where + ": empty output");
            c = conv->out_channels, h = oh, w = ow;
        } else if (const auto* fc = std::get_if<FcLayer>(&model.layers[i])) {
            const int in = flattened ? c : c * h * w;
            if (fc->in_features != in)
                throw schema_error(where + ": in_features " + std::to_string(fc->in_features) +
                                   " != incoming size " + std::to_string(in));
            c = fc->out_features, h = 1, w = 1;
            flattened = true;
        } else if (const auto* pool = std::get_if<PoolLayer>(&model.layers[i])) {
            if (flattened) throw schema_error(where + ": pool after flatten");
            int oh = (h - pool->kh) / pool->stride_h + 1;
            int ow = (w - pool->kw) / pool->stride_w + 1;
            if (oh <= 0 || ow <= 0) throw schema_error(where + ": empty output");
            h = oh, w = ow;
        } else if (std::holds_alternative<ArgmaxLayer>(model.layers[i])) {
            if (i + 1 != model.layers.size())
                throw schema_error(where + ": argmax must be the final layer");
        }
    }
}

}  // namespace pnax
