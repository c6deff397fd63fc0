#pragma once

// ANN-to-SNN conversion by data-based activation normalization.
//
// Each weight layer l is rescaled by the ratio of activation scales
// lambda_{l-1} / lambda_l (bias by 1 / lambda_l), where lambda_l is a
// high percentile of the layer's positive ReLU activations on calibration
// data and lambda_0 = 1 for inputs in [0, 1]. Afterwards every threshold is
// 1 and, for a ReLU network, the argmax of every layer is unchanged.

#include <span>
#include <vector>

#include "snn_sim/network.hpp"

namespace snn_sim {

inline constexpr double kDefaultPercentile = 0.999;

struct ActivationStats {
    double percentile = kDefaultPercentile;
    // One entry per weight layer (Dense/Conv2D), in layer order.
    std::vector<double> values;
};

// Output scores (pre-activation of the last layer). Hidden layers use ReLU;
// pooling is linear.
[[nodiscard]] std::vector<double> ann_forward(const NetworkSpec& spec, std::span<const float> input);

// Post-activation output of every layer (last layer included, ReLU applied
// to it as well, since that is what spiking neurons can represent).
[[nodiscard]] std::vector<std::vector<double>> ann_layer_activations(const NetworkSpec& spec,
                                                                     std::span<const float> input);

[[nodiscard]] std::size_t argmax(std::span<const double> scores);

// Percentile of the nonzero post-ReLU activations of every weight layer.
// percentile = 1 gives the maximum. Throws CalibrationError when the set is
// empty or a layer never activates.
[[nodiscard]] ActivationStats collect_stats(const NetworkSpec& spec,
                                            std::span<const std::span<const float>> inputs,
                                            double percentile = kDefaultPercentile);

// Linear-interpolated percentile, p in (0, 1]; values is reordered.
[[nodiscard]] double percentile_of(std::vector<double>& values, double p);

[[nodiscard]] NetworkSpec normalize(const NetworkSpec& spec, const ActivationStats& stats);

// Rejects networks the conversion cannot handle: non-ReLU hidden layers,
// unknown output activations.
void check_convertible(const NetworkSpec& spec);

}  // namespace snn_sim
