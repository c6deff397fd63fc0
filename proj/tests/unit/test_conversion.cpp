#include <doctest.h>

#include <algorithm>
#include <random>

#include "helpers.hpp"
#include "snn_sim/conversion.hpp"
#include "snn_sim/errors.hpp"

using namespace snn_sim;
using test_support::dense;

namespace {

NetworkSpec single_dense(std::vector<float> w, std::vector<float> b, std::size_t out, std::size_t in) {
    NetworkSpec s;
    s.input_shape = {in};
    s.class_count = out;
    s.layers.push_back(dense(out, in, std::move(w), std::move(b), "linear"));
    return s;
}

// numpy.percentile(values, 100 * p), method "linear".
double numpy_linear(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

TEST_CASE("ann_forward: zero input, identity network, shape mismatch") {
    const NetworkSpec zero = single_dense(std::vector<float>(6, 0.5f), {0, 0}, 2, 3);
    const std::vector<float> z(3, 0.0f);
    for (double s : ann_forward(zero, z)) {
        CHECK(s == 0.0);
    }

    const NetworkSpec id = single_dense({1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0}, 3, 3);
    const std::vector<float> x{0.25f, 0.5f, 0.75f};
    const auto y = ann_forward(id, x);
    CHECK(y == std::vector<double>{0.25, 0.5, 0.75});

    const std::vector<float> wrong(4, 0.0f);
    CHECK_THROWS_AS((void)ann_forward(id, wrong), ShapeMismatchError);
}

TEST_CASE("argmax breaks ties toward the lowest index") {
    const std::vector<double> a{0.1, 0.7, 0.7, 0.2};
    CHECK(argmax(a) == 1);
    const std::vector<double> z(5, 0.0);
    CHECK(argmax(z) == 0);
}

TEST_CASE("conv2d and avgpool forward against a hand-computed oracle") {
    NetworkSpec s;
    s.input_shape = {1, 3, 3};
    s.class_count = 4;
    Layer conv;
    conv.kind = LayerKind::Conv2D;
    conv.name = "conv";
    conv.weight_shape = {1, 1, 2, 2};
    conv.weights = {1, 2, 3, 4};
    conv.bias = {0.5f};
    conv.padding = 0;
    conv.stride = 1;
    s.layers.push_back(conv);
    Layer pool;
    pool.kind = LayerKind::AvgPool;
    pool.name = "pool";
    pool.activation = "none";
    pool.pool_size = 2;
    s.layers.push_back(pool);
    s.layers.push_back(dense(4, 1, {1, -1, 2, 0}, {0, 0, 0, 0}, "linear"));
    s.validate();

    const std::vector<float> x{1, 2, 3, 4, 5, 6, 7, 8, 9};
    // conv outputs: 1*1+2*2+3*4+4*5 = 37, 47, 67, 77; +0.5 each; pool = 57.5
    const auto acts = ann_layer_activations(s, x);
    REQUIRE(acts.size() == 3);
    CHECK(acts[0] == std::vector<double>{37.5, 47.5, 67.5, 77.5});
    CHECK(acts[1][0] == doctest::Approx(57.5));
    const auto y = ann_forward(s, x);
    CHECK(y == std::vector<double>{57.5, -57.5, 115.0, 0.0});
}

TEST_CASE("percentile matches the numpy linear-interpolation oracle") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v(1 + trial * 7);
        for (auto& x : v) {
            x = u(rng);
        }
        for (double p : {0.5, 0.9, 0.999, 1.0}) {
            auto copy = v;
            CHECK(percentile_of(copy, p) == doctest::Approx(numpy_linear(v, p)).epsilon(1e-12));
        }
    }
    std::vector<double> four{4, 1, 3, 2};
    CHECK(percentile_of(four, 0.5) == 2.5);
}

TEST_CASE("collect_stats: single input gives the maximum activation") {
    const NetworkSpec s = single_dense({1, 0, 0, 2, 0.5f, 0.5f}, {0, 0}, 2, 3);
    const std::vector<float> x{0.2f, 0.4f, 0.6f};
    const std::vector<std::span<const float>> views{x};
    const ActivationStats st = collect_stats(s, views, 1.0);
    REQUIRE(st.values.size() == 1);
    // outputs: 0.2 and 2*0.2 + 0.5*0.4 + 0.5*0.6 = 0.9
    CHECK(st.values[0] == doctest::Approx(0.9));
}

TEST_CASE("collect_stats: all-zero calibration data is rejected") {
    const NetworkSpec s = single_dense({1, 1, 1, 1}, {0, 0}, 2, 2);
    const std::vector<float> z(2, 0.0f);
    const std::vector<std::span<const float>> views{z, z};
    CHECK_THROWS_AS((void)collect_stats(s, views, 1.0), CalibrationError);
    CHECK_THROWS_AS((void)collect_stats(s, {}, 1.0), CalibrationError);
}

TEST_CASE("collect_stats: percentile 0.999 never exceeds the maximum") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0.0, 0.3);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    NetworkSpec s;
    s.input_shape = {16};
    s.class_count = 4;
    std::vector<float> w1(8 * 16);
    std::vector<float> w2(4 * 8);
    for (auto& w : w1) {
        w = static_cast<float>(n(rng));
    }
    for (auto& w : w2) {
        w = static_cast<float>(n(rng));
    }
    s.layers.push_back(dense(8, 16, w1, std::vector<float>(8, 0.1f)));
    s.layers.push_back(dense(4, 8, w2, std::vector<float>(4, 0.1f), "linear"));

    std::vector<std::vector<float>> inputs(100, std::vector<float>(16));
    for (auto& x : inputs) {
        for (auto& v : x) {
            v = u(rng);
        }
    }
    const std::vector<std::span<const float>> views(inputs.begin(), inputs.end());
    const ActivationStats p999 = collect_stats(s, views, 0.999);
    const ActivationStats pmax = collect_stats(s, views, 1.0);
    for (std::size_t l = 0; l < p999.values.size(); ++l) {
        CHECK(p999.values[l] <= pmax.values[l]);
    }
}

TEST_CASE("normalize: one layer divided by its scale, thresholds reset") {
    NetworkSpec s = single_dense({4, 8, -4, 2}, {2, -1}, 2, 2);
    s.layers[0].threshold = 3.0;
    const NetworkSpec n = normalize(s, ActivationStats{1.0, {4.0}});
    CHECK(n.normalized);
    CHECK(n.layers[0].threshold == 1.0);
    CHECK(n.layers[0].weights == std::vector<float>{1, 2, -1, 0.5f});
    CHECK(n.layers[0].bias == std::vector<float>{0.5f, -0.25f});
}

TEST_CASE("normalize: identity network is unchanged") {
    const NetworkSpec s = single_dense({1, 0, 0, 1}, {0, 0}, 2, 2);
    const std::vector<float> x{1.0f, 1.0f};
    const std::vector<std::span<const float>> views{x};
    const ActivationStats st = collect_stats(s, views, 1.0);
    CHECK(st.values == std::vector<double>{1.0});
    const NetworkSpec n = normalize(s, st);
    CHECK(n.layers[0].weights == s.layers[0].weights);
    CHECK(n.layers[0].bias == s.layers[0].bias);
}

TEST_CASE("normalize: two layers use the ratio of scales, pooling passes the scale through") {
    NetworkSpec s;
    s.input_shape = {1, 2, 2};
    s.class_count = 2;
    Layer conv;
    conv.kind = LayerKind::Conv2D;
    conv.weight_shape = {1, 1, 1, 1};
    conv.weights = {2.0f};
    conv.bias = {1.0f};
    s.layers.push_back(conv);
    Layer pool;
    pool.kind = LayerKind::AvgPool;
    pool.activation = "none";
    pool.pool_size = 2;
    s.layers.push_back(pool);
    s.layers.push_back(dense(2, 1, {3, 6}, {1.5f, 3}, "linear"));
    const NetworkSpec n = normalize(s, ActivationStats{1.0, {2.0, 6.0}});
    CHECK(n.layers[0].weights[0] == 1.0f);
    CHECK(n.layers[0].bias[0] == 0.5f);
    CHECK(n.layers[1].threshold == 1.0);
    CHECK(n.layers[2].weights == std::vector<float>{1, 2});
    CHECK(n.layers[2].bias == std::vector<float>{0.25f, 0.5f});
}

TEST_CASE("normalize: invalid stats and unsupported networks") {
    const NetworkSpec s = single_dense({1, 0, 0, 1}, {0, 0}, 2, 2);
    CHECK_THROWS_AS((void)normalize(s, ActivationStats{1.0, {0.0}}), CalibrationError);
    CHECK_THROWS_AS((void)normalize(s, ActivationStats{1.0, {-1.0}}), CalibrationError);
    CHECK_THROWS_AS((void)normalize(s, ActivationStats{1.0, {1.0, 1.0}}), CalibrationError);

    NetworkSpec t;
    t.input_shape = {2};
    t.class_count = 2;
    t.layers.push_back(dense(2, 2, {1, 0, 0, 1}, {0, 0}, "tanh"));
    t.layers.push_back(dense(2, 2, {1, 0, 0, 1}, {0, 0}, "linear"));
    CHECK_THROWS_AS((void)normalize(t, ActivationStats{1.0, {1.0, 1.0}}), UnsupportedNetworkError);
    CHECK_THROWS_AS(check_convertible(t), UnsupportedNetworkError);
}

TEST_CASE("fixture bundle: accuracy matches the trainer log, normalization keeps every argmax") {
    const WeightsBundle b = load_bundle(test_support::fixture_manifest());
    REQUIRE(b.stats.has_value());
    const Dataset test = test_support::test_set();
    const Dataset calib = test_support::calibration_set();

    std::size_t correct = 0;
    const NetworkSpec n = normalize(b.spec, *b.stats);
    std::size_t same = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const std::size_t a = argmax(ann_forward(b.spec, test.image(i)));
        correct += a == test.labels[i] ? 1 : 0;
        same += a == argmax(ann_forward(n, test.image(i))) ? 1 : 0;
    }
    // Trainer log: test_correct 955 of 1000.
    CHECK(static_cast<double>(correct) / 1000.0 == doctest::Approx(0.955).epsilon(0.001));
    CHECK(same == test.size());

    // The stored stats are reproducible from the calibration split.
    const auto views = calib.image_views();
    const ActivationStats again = collect_stats(b.spec, views, b.stats->percentile);
    for (std::size_t l = 0; l < again.values.size(); ++l) {
        CHECK(again.values[l] == doctest::Approx(b.stats->values[l]).epsilon(1e-5));
    }

    // Normalizing with recomputed stats, then collecting again, gives scale factors of 1.
    const NetworkSpec renorm = normalize(b.spec, again);
    const ActivationStats second = collect_stats(renorm, views, b.stats->percentile);
    for (double v : second.values) {
        CHECK(std::abs(v - 1.0) <= 1e-6);
    }
}
