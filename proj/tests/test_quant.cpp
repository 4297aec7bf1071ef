#include <doctest.h>

#include <cstdint>
#include <vector>

#include "pnax/errors.hpp"
#include "pnax/inference.hpp"
#include "pnax/model.hpp"
#include "pnax/quantize.hpp"

using namespace pnax;

namespace {

// All scales 1, all zero points 0, so quantized arithmetic is plain integer
// arithmetic and outputs are hand-checkable.
QuantModel unit_scale_model() {
    QuantModel m;
    m.name = "unit";
    m.input_shape = {1, 4, 4};

    Conv2dLayer conv;
    conv.in_channels = 1;
    conv.out_channels = 2;
    conv.kh = conv.kw = 2;
    conv.weights.shape = {2, 1, 2, 2};
    conv.weights.data = {1, 2, 0, 1,   // filter 0
                         3, 0, 1, 1};  // filter 1
    conv.bias = {0, 5};
    conv.weight_sums = {4, 5};
    m.layers.emplace_back(conv);

    m.layers.emplace_back(ReluLayer{});

    PoolLayer pool;
    pool.kind = PoolKind::Max;
    pool.kh = pool.kw = 2;
    pool.stride_h = pool.stride_w = 1;
    m.layers.emplace_back(pool);

    FcLayer fc;
    fc.in_features = 8;
    fc.out_features = 3;
    fc.weights.shape = {3, 8};
    fc.weights.data = {1, 0, 0, 0, 0, 0, 0, 0,  //
                       0, 1, 0, 0, 0, 0, 0, 0,  //
                       0, 0, 1, 0, 0, 0, 0, 0};
    fc.bias = {0, 0, 0};
    fc.weight_sums = {1, 1, 1};
    m.layers.emplace_back(fc);

    m.layers.emplace_back(ArgmaxLayer{});
    return m;
}

QuantTensor make_tensor(std::vector<int> shape, std::vector<std::uint8_t> data,
                        QuantParams q = {1.0, 0}) {
    QuantTensor t;
    t.shape = std::move(shape);
    t.data = std::move(data);
    t.q = q;
    return t;
}

}  // namespace

TEST_CASE("affine parameter selection") {
    {
        const QuantParams q = affine_params(0.0, 255.0);
        CHECK(q.scale == doctest::Approx(1.0));
        CHECK(q.zero_point == 0);
    }
    {
        // symmetric range: -min/scale = 127.5 rounds away from zero to 128
        const QuantParams q = affine_params(-1.0, 1.0);
        CHECK(q.scale == doctest::Approx(2.0 / 255.0));
        CHECK(q.zero_point == 128);
    }
    {
        const QuantParams q = affine_params(0.5, 0.5);  // degenerate
        CHECK(q.scale == 1.0);
    }
    CHECK_THROWS_AS(affine_params(1.0, -1.0), config_error);
}

TEST_CASE("quantize_value rounds half away from zero and clamps") {
    const QuantParams q{1.0, 128};
    CHECK(quantize_value(0.5, q) == 129);
    CHECK(quantize_value(-0.5, q) == 127);
    CHECK(quantize_value(0.49, q) == 128);
    CHECK(quantize_value(1000.0, q) == 255);
    CHECK(quantize_value(-1000.0, q) == 0);

    // round trip stays within half a step
    const QuantParams r = affine_params(-3.0, 5.0);
    for (double x = -3.0; x <= 5.0; x += 0.37) {
        const std::uint8_t qv = quantize_value(x, r);
        const double back = r.scale * (qv - r.zero_point);
        CHECK(std::abs(back - x) <= r.scale / 2 + 1e-12);
    }
}

TEST_CASE("exact quantized convolution on unit scales") {
    const QuantModel m = unit_scale_model();
    const auto* conv = std::get_if<Conv2dLayer>(&m.layers[0]);
    REQUIRE(conv != nullptr);

    const QuantTensor input = make_tensor({1, 4, 4}, {0, 1, 2, 3,    //
                                                      4, 5, 6, 7,    //
                                                      8, 9, 10, 11,  //
                                                      12, 13, 14, 15});
    const CompiledAssignment ze = compile_assignment(m, {});
    const QuantTensor out = conv2d_approx(input, *conv, ze.layers[0]);
    REQUIRE(out.shape == std::vector<int>{2, 3, 3});
    // filter 0 at (0,0): 1*0 + 2*1 + 0*4 + 1*5 = 7
    CHECK(out.data[0] == 7);
    // filter 1 at (2,2): 3*10 + 0*11 + 1*14 + 1*15 + bias 5 = 64
    CHECK(out.data[1 * 9 + 8] == 64);
}

TEST_CASE("single-weight accumulator matches the multiplier example") {
    // 1x1 conv, w_q = 5, a_q = 7, zero points 0: PE z=2 accumulator is 20
    QuantModel m;
    m.name = "one";
    m.input_shape = {1, 1, 1};
    Conv2dLayer conv;
    conv.in_channels = conv.out_channels = 1;
    conv.kh = conv.kw = 1;
    conv.weights.shape = {1, 1, 1, 1};
    conv.weights.data = {5};
    conv.bias = {0};
    conv.weight_sums = {5};
    m.layers.emplace_back(conv);
    m.layers.emplace_back(ArgmaxLayer{});

    ModeAssignment a;
    a.set(0, 0, 0, ApproxMode::pe(2));
    const CompiledAssignment compiled = compile_assignment(m, a);

    const QuantTensor input = make_tensor({1, 1, 1}, {7});
    const QuantTensor out =
        conv2d_approx(input, *std::get_if<Conv2dLayer>(&m.layers[0]), compiled.layers[0]);
    CHECK(out.data[0] == 20);

    const QuantTensor exact =
        conv2d_approx(input, *std::get_if<Conv2dLayer>(&m.layers[0]),
                      compile_assignment(m, {}).layers[0]);
    CHECK(exact.data[0] == 35);
}

TEST_CASE("zero-point corrections cancel padding contributions") {
    // 3x3 conv with padding 1 over a 1x1 input: all 8 padded taps carry the
    // activation zero point, so only the center tap can contribute.
    QuantModel m;
    m.name = "pad";
    m.input_shape = {1, 1, 1};
    Conv2dLayer conv;
    conv.in_channels = conv.out_channels = 1;
    conv.kh = conv.kw = 3;
    conv.pad_h = conv.pad_w = 1;
    conv.weights.shape = {1, 1, 3, 3};
    conv.weights.data = {9, 9, 9, 9, 7, 9, 9, 9, 9};
    conv.weights.q = {1.0, 2};  // dequantized center weight: 7 - 2 = 5
    conv.bias = {40};
    conv.weight_sums = {9 * 8 + 7};
    conv.out = {1.0, 0};
    m.layers.emplace_back(conv);
    m.layers.emplace_back(ArgmaxLayer{});

    QuantTensor input = make_tensor({1, 1, 1}, {13}, {1.0, 10});
    // real: (7-2) * (13-10) + bias 40 = 55
    const QuantTensor out =
        conv2d_approx(input, *std::get_if<Conv2dLayer>(&m.layers[0]),
                      compile_assignment(m, {}).layers[0]);
    CHECK(out.data[0] == 55);
}

TEST_CASE("requantization rounds half away from zero") {
    QuantModel m;
    m.name = "requant";
    m.input_shape = {1, 1, 1};
    Conv2dLayer conv;
    conv.in_channels = conv.out_channels = 1;
    conv.kh = conv.kw = 1;
    conv.weights.shape = {1, 1, 1, 1};
    conv.weights.data = {1};
    conv.bias = {0};
    conv.weight_sums = {1};
    conv.out = {2.0, 100};  // M = 1/2, so odd accumulators hit .5 exactly
    m.layers.emplace_back(conv);
    m.layers.emplace_back(ArgmaxLayer{});

    const auto* c = std::get_if<Conv2dLayer>(&m.layers[0]);
    const CompiledAssignment ze = compile_assignment(m, {});
    CHECK(conv2d_approx(make_tensor({1, 1, 1}, {3}), *c, ze.layers[0]).data[0] == 102);  // 1.5 -> 2
    CHECK(conv2d_approx(make_tensor({1, 1, 1}, {2}), *c, ze.layers[0]).data[0] == 101);
}

TEST_CASE("relu clamps at the zero point") {
    QuantTensor t = make_tensor({1, 1, 4}, {0, 99, 100, 255}, {0.5, 100});
    const QuantTensor out = relu_quant(t);
    CHECK(out.data == std::vector<std::uint8_t>{100, 100, 100, 255});
}

TEST_CASE("pooling kinds") {
    const QuantTensor t = make_tensor({1, 2, 2}, {1, 2, 3, 4});
    PoolLayer max_pool{PoolKind::Max, 2, 2, 2, 2};
    CHECK(pool_quant(t, max_pool).data == std::vector<std::uint8_t>{4});
    PoolLayer avg_pool{PoolKind::Avg, 2, 2, 2, 2};
    // (1+2+3+4)/4 = 2.5 rounds away from zero to 3
    CHECK(pool_quant(t, avg_pool).data == std::vector<std::uint8_t>{3});
    const QuantTensor u = make_tensor({1, 2, 2}, {1, 1, 2, 2});
    CHECK(pool_quant(u, avg_pool).data == std::vector<std::uint8_t>{2});  // 1.5 -> 2
}

TEST_CASE("inference end to end on the unit model") {
    const QuantModel m = unit_scale_model();
    const QuantTensor input = make_tensor({1, 4, 4}, {0, 1, 2, 3,    //
                                                      4, 5, 6, 7,    //
                                                      8, 9, 10, 11,  //
                                                      12, 13, 14, 15});
    const InferenceResult r = run_inference(m, input, ModeAssignment{});
    // filter-0 conv plane is 16i+4j+7; 2x2 stride-1 max pool gives 27,31,43,47
    // and the fc taps the first three pooled values
    CHECK(r.logits == std::vector<double>{27, 31, 43});
    CHECK(r.class_index == 2);

    // empty assignment behaves exactly like an explicit all-ZE one
    ModeAssignment explicit_ze;
    explicit_ze.set(0, 0, 0, ApproxMode::ze());
    CHECK(run_inference(m, input, explicit_ze).class_index == r.class_index);

    QuantTensor bad = input;
    bad.shape = {1, 2, 8};
    CHECK_THROWS_AS(run_inference(m, bad, ModeAssignment{}), input_error);
}

TEST_CASE("argmax ties resolve to the lowest class index") {
    QuantModel m = unit_scale_model();
    auto* fc = std::get_if<FcLayer>(&m.layers[3]);
    fc->weights.data.assign(fc->weights.data.size(), 0);  // all logits equal
    fc->weight_sums = {0, 0, 0};
    const QuantTensor input = make_tensor({1, 4, 4}, std::vector<std::uint8_t>(16, 9));
    CHECK(run_inference(m, input, ModeAssignment{}).class_index == 0);
}

TEST_CASE("dot-product accumulation order does not matter") {
    const QuantModel m = unit_scale_model();
    const auto* fc = std::get_if<FcLayer>(&m.layers[3]);
    QuantTensor in = make_tensor({8, 1, 1}, {5, 9, 200, 7, 31, 2, 250, 8});

    ModeAssignment a;
    for (int p = 0; p < 8; ++p) a.set(3, 0, p, p % 2 ? ApproxMode::pe(3) : ApproxMode::ne(2));
    const CompiledAssignment compiled = compile_assignment(m, a);
    const QuantTensor out = fc_approx(in, *fc, *compiled.find(3));

    // reversed-order accumulation of the same dot product
    std::int64_t acc = 0;
    for (int p = 7; p >= 0; --p) {
        const ApproxMode mode = a.get(3, 0, p);
        acc += approx_multiply(fc->weights.data[p], in.data[p], mode).product;
    }
    CHECK(out.data[0] == static_cast<std::uint8_t>(std::clamp<std::int64_t>(acc, 0, 255)));
}

TEST_CASE("quantize_model maps a calibrated float model") {
    FloatModel fm;
    fm.name = "float-tiny";
    fm.input_shape = {1, 2, 2};
    fm.input_range = {0.0, 1.0};

    FloatConv2d conv;
    conv.in_channels = conv.out_channels = 1;
    conv.kh = conv.kw = 2;
    conv.weights.shape = {1, 1, 2, 2};
    conv.weights.data = {-1.0f, 0.0f, 0.5f, 1.0f};
    conv.bias = {0.25f};
    conv.out_range = {0.0, 2.0};
    fm.layers.emplace_back(conv);
    fm.layers.emplace_back(ArgmaxLayer{});

    const QuantModel qm = quantize_model(fm);
    CHECK(qm.name == "float-tiny");
    CHECK(qm.input_q.scale == doctest::Approx(1.0 / 255.0));
    CHECK(qm.input_q.zero_point == 0);

    const auto* qc = std::get_if<Conv2dLayer>(&qm.layers[0]);
    REQUIRE(qc != nullptr);
    // weight range [-1, 1]: scale 2/255, zero point 128
    CHECK(qc->weights.q.zero_point == 128);
    CHECK(qc->weights.data == std::vector<std::uint8_t>{0, 128, 192, 255});
    // bias at scale_w * scale_in = (2/255) * (1/255)
    CHECK(qc->bias[0] == 8128);  // round(0.25 * 255 * 255 / 2)
    CHECK(qc->weight_sums[0] == 0 + 128 + 192 + 255);
    CHECK(qc->out.scale == doctest::Approx(2.0 / 255.0));
    CHECK(qc->out.zero_point == 0);
}

TEST_CASE("quantizing a constant tensor lands on the zero point") {
    FloatModel fm;
    fm.name = "const";
    fm.input_shape = {1, 1, 1};
    fm.input_range = {0.0, 1.0};
    FloatFc fc;
    fc.in_features = 1;
    fc.out_features = 2;
    fc.weights.shape = {2, 1};
    fc.weights.data = {0.0f, 0.0f};
    fc.bias = {0.0f, 0.0f};
    fc.out_range = {0.0, 1.0};
    fm.layers.emplace_back(fc);
    fm.layers.emplace_back(ArgmaxLayer{});

    const QuantModel qm = quantize_model(fm);
    const auto* qfc = std::get_if<FcLayer>(&qm.layers[0]);
    REQUIRE(qfc != nullptr);
    for (std::uint8_t v : qfc->weights.data) CHECK(v == qfc->weights.q.zero_point);
}

TEST_CASE("evaluation subsets and worker counts") {
    const QuantModel m = unit_scale_model();
    Dataset ds;
    ds.count = 12;
    ds.rows = ds.cols = 4;
    ds.images.resize(12 * 16);
    for (std::size_t i = 0; i < ds.images.size(); ++i)
        ds.images[i] = static_cast<std::uint8_t>((i * 37) % 251);
    ds.labels = {0, 1, 2, 0, 1, 2, 0, 1, 2, 0, 1, 2};

    const EvalResult one = evaluate_accuracy(m, ds, ModeAssignment{}, 1, 42, 1);
    CHECK(one.n == 1);
    CHECK((one.accuracy == 0.0 || one.accuracy == 1.0));

    const EvalResult serial = evaluate_accuracy(m, ds, ModeAssignment{}, 0, 0, 1);
    const EvalResult threaded = evaluate_accuracy(m, ds, ModeAssignment{}, 0, 0, 4);
    CHECK(serial.predictions == threaded.predictions);
    CHECK(serial.accuracy == threaded.accuracy);

    const EvalResult again = evaluate_accuracy(m, ds, ModeAssignment{}, 0, 0, 1);
    CHECK(serial.predictions == again.predictions);
}
