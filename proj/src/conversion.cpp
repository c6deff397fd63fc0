#include "snn_sim/conversion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "snn_sim/errors.hpp"

namespace snn_sim {

namespace {

bool is_output_activation(const std::string& a) {
    return a == "relu" || a == "linear" || a == "softmax";
}

// Runs the network, calling visit(layer_index, pre_activation) on each
// layer's linear output before its activation is applied.
template <typename Visit>
std::vector<double> forward(const NetworkSpec& spec, std::span<const float> input, Visit&& visit) {
    Shape3 shape = spec.input_shape3();
    if (input.size() != shape.size()) {
        throw ShapeMismatchError("input has " + std::to_string(input.size()) +
                                 " values, network expects " + std::to_string(shape.size()));
    }
    std::vector<double> current(input.begin(), input.end());
    std::vector<double> next;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const Layer& layer = spec.layers[l];
        const Shape3 out_shape = layer.output_shape(shape);
        next.assign(out_shape.size(), 0.0);
        apply_linear(layer, shape, current, next);
        if (layer.has_weights()) {
            const std::size_t plane = out_shape.height * out_shape.width;
            for (std::size_t i = 0; i < next.size(); ++i) {
                next[i] += static_cast<double>(layer.bias[i / plane]);
            }
        }
        visit(l, next);
        const bool last = l + 1 == spec.layers.size();
        if (!last && layer.activation == "relu") {
            for (auto& v : next) {
                v = std::max(v, 0.0);
            }
        }
        current.swap(next);
        shape = out_shape;
    }
    return current;
}

}  // namespace

void check_convertible(const NetworkSpec& spec) {
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const Layer& layer = spec.layers[l];
        const bool last = l + 1 == spec.layers.size();
        if (layer.kind == LayerKind::AvgPool) {
            if (layer.activation != "none" && layer.activation != "linear") {
                throw UnsupportedNetworkError("pool layer '" + layer.name +
                                              "' must not have an activation");
            }
            continue;
        }
        if (last ? !is_output_activation(layer.activation) : layer.activation != "relu") {
            throw UnsupportedNetworkError("layer '" + layer.name + "' uses activation '" +
                                          layer.activation + "'; only ReLU networks convert");
        }
    }
}

std::vector<double> ann_forward(const NetworkSpec& spec, std::span<const float> input) {
    return forward(spec, input, [](std::size_t, const std::vector<double>&) {});
}

std::vector<std::vector<double>> ann_layer_activations(const NetworkSpec& spec,
                                                       std::span<const float> input) {
    std::vector<std::vector<double>> out;
    out.reserve(spec.layers.size());
    forward(spec, input, [&](std::size_t l, const std::vector<double>& pre) {
        auto& act = out.emplace_back(pre);
        if (spec.layers[l].has_weights()) {
            for (auto& v : act) {
                v = std::max(v, 0.0);
            }
        }
    });
    return out;
}

std::size_t argmax(std::span<const double> scores) {
    return static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

double percentile_of(std::vector<double>& values, double p) {
    if (values.empty()) {
        throw CalibrationError("percentile of an empty set");
    }
    if (!(p > 0.0 && p <= 1.0)) {
        throw ConfigurationError("percentile must be in (0, 1]");
    }
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(lo);
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
    const double lo_value = values[lo];
    if (frac == 0.0 || lo + 1 >= values.size()) {
        return lo_value;
    }
    const double hi_value =
        *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
    return lo_value + frac * (hi_value - lo_value);
}

ActivationStats collect_stats(const NetworkSpec& spec, std::span<const std::span<const float>> inputs,
                              double percentile) {
    if (inputs.empty()) {
        throw CalibrationError("calibration set is empty");
    }
    if (!(percentile > 0.0 && percentile <= 1.0)) {
        throw ConfigurationError("percentile must be in (0, 1]");
    }
    check_convertible(spec);
    spec.validate();

    std::vector<std::vector<double>> positive(spec.layers.size());
    for (const auto& input : inputs) {
        forward(spec, input, [&](std::size_t l, const std::vector<double>& pre) {
            if (!spec.layers[l].has_weights()) {
                return;
            }
            for (double v : pre) {
                if (v > 0.0) {
                    positive[l].push_back(v);
                }
            }
        });
    }

    ActivationStats stats;
    stats.percentile = percentile;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        if (!spec.layers[l].has_weights()) {
            continue;
        }
        if (positive[l].empty()) {
            throw CalibrationError("layer '" + spec.layers[l].name +
                                   "' has no positive activation on the calibration set");
        }
        stats.values.push_back(percentile_of(positive[l], percentile));
    }
    return stats;
}

NetworkSpec normalize(const NetworkSpec& spec, const ActivationStats& stats) {
    check_convertible(spec);
    spec.validate();
    if (stats.values.size() != spec.weight_layer_count()) {
        throw CalibrationError("activation stats have " + std::to_string(stats.values.size()) +
                               " entries for " + std::to_string(spec.weight_layer_count()) +
                               " weight layers");
    }
    for (double v : stats.values) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw CalibrationError("activation stats must be finite and > 0");
        }
    }

    NetworkSpec out = spec;
    double previous_scale = 1.0;
    std::size_t k = 0;
    for (auto& layer : out.layers) {
        layer.threshold = 1.0;
        if (!layer.has_weights()) {
            continue;
        }
        const double scale = stats.values[k++];
        const double weight_factor = previous_scale / scale;
        for (auto& w : layer.weights) {
            w = static_cast<float>(static_cast<double>(w) * weight_factor);
        }
        for (auto& b : layer.bias) {
            b = static_cast<float>(static_cast<double>(b) / scale);
        }
        previous_scale = scale;
    }
    out.normalized = true;
    return out;
}

}  // namespace snn_sim
