#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace snn_sim {

enum class LayerKind { Dense, Conv2D, AvgPool };

[[nodiscard]] std::string to_string(LayerKind kind);

// Feature-map shape. Flat vectors use {n, 1, 1}.
struct Shape3 {
    std::size_t channels = 0;
    std::size_t height = 1;
    std::size_t width = 1;

    [[nodiscard]] std::size_t size() const { return channels * height * width; }
    friend bool operator==(const Shape3&, const Shape3&) = default;
};

struct Layer {
    LayerKind kind = LayerKind::Dense;
    std::string name;
    // "relu" for hidden layers; the output layer may also be "linear" or
    // "softmax". Pooling layers use "none".
    std::string activation = "relu";

    // Dense: [out, in]. Conv2D: [out_c, in_c, kh, kw]. AvgPool: empty.
    std::vector<std::size_t> weight_shape;
    std::vector<float> weights;
    std::vector<float> bias;
    double threshold = 1.0;

    std::size_t stride = 1;     // Conv2D
    std::size_t padding = 0;    // Conv2D
    std::size_t pool_size = 2;  // AvgPool window and stride

    [[nodiscard]] bool has_weights() const { return kind != LayerKind::AvgPool; }
    // Output shape for a given input, or ShapeMismatchError.
    [[nodiscard]] Shape3 output_shape(const Shape3& in) const;
};

struct NetworkSpec {
    // [n] for flat input or [c, h, w].
    std::vector<std::size_t> input_shape;
    std::size_t class_count = 0;
    std::vector<Layer> layers;
    // Set by conversion; the engine refuses specs without it.
    bool normalized = false;

    [[nodiscard]] Shape3 input_shape3() const;
    [[nodiscard]] std::size_t input_size() const { return input_shape3().size(); }
    // Output shape of every layer, after validating that they compose.
    [[nodiscard]] std::vector<Shape3> layer_shapes() const;
    [[nodiscard]] std::size_t weight_layer_count() const;
    // Spiking neurons in the converted network (every layer's outputs).
    [[nodiscard]] std::size_t neuron_count() const;

    // Throws ShapeMismatchError or ConfigurationError.
    void validate() const;
};

// Linear part of a layer, out = W * in (no bias, no activation).
// AvgPool averages each window.
void apply_linear(const Layer& layer, const Shape3& in_shape, std::span<const double> in,
                  std::span<double> out);

// One input unit's outgoing connections: output index and weight.
struct FanOut {
    std::vector<std::size_t> offsets;  // size in_count + 1
    std::vector<std::size_t> targets;
    std::vector<double> weights;

    [[nodiscard]] std::size_t input_count() const { return offsets.size() - 1; }
};

// Column view of a layer, used to propagate sparse spike vectors.
[[nodiscard]] FanOut build_fan_out(const Layer& layer, const Shape3& in_shape);

}  // namespace snn_sim
