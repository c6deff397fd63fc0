#include "snn_sim/network.hpp"

#include <algorithm>
#include <cassert>
#include <string>

#include "snn_sim/errors.hpp"

namespace snn_sim {

namespace {

std::string shape_str(const Shape3& s) {
    return std::to_string(s.channels) + "x" + std::to_string(s.height) + "x" +
           std::to_string(s.width);
}

std::size_t product(const std::vector<std::size_t>& dims) {
    std::size_t n = 1;
    for (auto d : dims) {
        n *= d;
    }
    return n;
}

// Calls fn(out_index, in_index, weight) for every connection of the layer.
template <typename Fn>
void for_each_connection(const Layer& layer, const Shape3& in, Fn&& fn) {
    const Shape3 out = layer.output_shape(in);
    switch (layer.kind) {
        case LayerKind::Dense: {
            const std::size_t n_in = in.size();
            for (std::size_t o = 0; o < out.channels; ++o) {
                const float* row = layer.weights.data() + o * n_in;
                for (std::size_t i = 0; i < n_in; ++i) {
                    fn(o, i, static_cast<double>(row[i]));
                }
            }
            break;
        }
        case LayerKind::Conv2D: {
            const std::size_t kh = layer.weight_shape[2];
            const std::size_t kw = layer.weight_shape[3];
            const auto pad = static_cast<std::ptrdiff_t>(layer.padding);
            for (std::size_t oc = 0; oc < out.channels; ++oc) {
                for (std::size_t oy = 0; oy < out.height; ++oy) {
                    for (std::size_t ox = 0; ox < out.width; ++ox) {
                        const std::size_t o = (oc * out.height + oy) * out.width + ox;
                        for (std::size_t ic = 0; ic < in.channels; ++ic) {
                            for (std::size_t ky = 0; ky < kh; ++ky) {
                                const auto iy = static_cast<std::ptrdiff_t>(oy * layer.stride + ky) - pad;
                                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in.height)) {
                                    continue;
                                }
                                for (std::size_t kx = 0; kx < kw; ++kx) {
                                    const auto ix =
                                        static_cast<std::ptrdiff_t>(ox * layer.stride + kx) - pad;
                                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in.width)) {
                                        continue;
                                    }
                                    const std::size_t i =
                                        (ic * in.height + static_cast<std::size_t>(iy)) * in.width +
                                        static_cast<std::size_t>(ix);
                                    const std::size_t w = ((oc * in.channels + ic) * kh + ky) * kw + kx;
                                    fn(o, i, static_cast<double>(layer.weights[w]));
                                }
                            }
                        }
                    }
                }
            }
            break;
        }
        case LayerKind::AvgPool: {
            const std::size_t k = layer.pool_size;
            const double w = 1.0 / static_cast<double>(k * k);
            for (std::size_t c = 0; c < out.channels; ++c) {
                for (std::size_t oy = 0; oy < out.height; ++oy) {
                    for (std::size_t ox = 0; ox < out.width; ++ox) {
                        const std::size_t o = (c * out.height + oy) * out.width + ox;
                        for (std::size_t ky = 0; ky < k; ++ky) {
                            for (std::size_t kx = 0; kx < k; ++kx) {
                                const std::size_t i =
                                    (c * in.height + oy * k + ky) * in.width + ox * k + kx;
                                fn(o, i, w);
                            }
                        }
                    }
                }
            }
            break;
        }
    }
}

}  // namespace

std::string to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::Dense:
            return "dense";
        case LayerKind::Conv2D:
            return "conv2d";
        case LayerKind::AvgPool:
            return "avgpool";
    }
    return "unknown";
}

Shape3 Layer::output_shape(const Shape3& in) const {
    switch (kind) {
        case LayerKind::Dense: {
            if (weight_shape.size() != 2 || weight_shape[1] != in.size()) {
                throw ShapeMismatchError("dense layer '" + name + "' expects " +
                                         (weight_shape.size() == 2 ? std::to_string(weight_shape[1])
                                                                   : std::string("?")) +
                                         " inputs, got " + shape_str(in));
            }
            return {weight_shape[0], 1, 1};
        }
        case LayerKind::Conv2D: {
            if (weight_shape.size() != 4 || weight_shape[1] != in.channels) {
                throw ShapeMismatchError("conv layer '" + name + "' channel mismatch with input " +
                                         shape_str(in));
            }
            if (stride == 0) {
                throw ShapeMismatchError("conv layer '" + name + "' has zero stride");
            }
            const std::size_t kh = weight_shape[2];
            const std::size_t kw = weight_shape[3];
            if (in.height + 2 * padding < kh || in.width + 2 * padding < kw) {
                throw ShapeMismatchError("conv layer '" + name + "' kernel larger than input " +
                                         shape_str(in));
            }
            return {weight_shape[0], (in.height + 2 * padding - kh) / stride + 1,
                    (in.width + 2 * padding - kw) / stride + 1};
        }
        case LayerKind::AvgPool: {
            if (pool_size == 0 || in.height < pool_size || in.width < pool_size) {
                throw ShapeMismatchError("pool layer '" + name + "' window does not fit input " +
                                         shape_str(in));
            }
            return {in.channels, in.height / pool_size, in.width / pool_size};
        }
    }
    throw ShapeMismatchError("unknown layer kind");
}

Shape3 NetworkSpec::input_shape3() const {
    if (input_shape.size() == 1) {
        return {input_shape[0], 1, 1};
    }
    if (input_shape.size() == 3) {
        return {input_shape[0], input_shape[1], input_shape[2]};
    }
    throw ShapeMismatchError("input_shape must have 1 or 3 dimensions");
}

std::vector<Shape3> NetworkSpec::layer_shapes() const {
    std::vector<Shape3> shapes;
    shapes.reserve(layers.size());
    Shape3 current = input_shape3();
    for (const auto& layer : layers) {
        current = layer.output_shape(current);
        shapes.push_back(current);
    }
    return shapes;
}

std::size_t NetworkSpec::weight_layer_count() const {
    return static_cast<std::size_t>(
        std::count_if(layers.begin(), layers.end(), [](const Layer& l) { return l.has_weights(); }));
}

std::size_t NetworkSpec::neuron_count() const {
    std::size_t n = 0;
    for (const auto& s : layer_shapes()) {
        n += s.size();
    }
    return n;
}

void NetworkSpec::validate() const {
    if (layers.empty()) {
        throw ConfigurationError("network has no layers");
    }
    const auto shapes = layer_shapes();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Layer& l = layers[i];
        if (!(l.threshold > 0.0)) {
            throw ConfigurationError("layer '" + l.name + "' threshold must be > 0");
        }
        if (l.has_weights()) {
            if (l.weights.size() != product(l.weight_shape)) {
                throw ShapeMismatchError("layer '" + l.name + "' weight count does not match shape");
            }
            if (l.bias.size() != shapes[i].channels) {
                throw ShapeMismatchError("layer '" + l.name + "' bias length " +
                                         std::to_string(l.bias.size()) + " != " +
                                         std::to_string(shapes[i].channels));
            }
        } else if (!l.weights.empty() || !l.bias.empty()) {
            throw ShapeMismatchError("pool layer '" + l.name + "' must not carry weights");
        }
    }
    if (shapes.back().size() != class_count) {
        throw ShapeMismatchError("last layer has " + std::to_string(shapes.back().size()) +
                                 " outputs but class_count is " + std::to_string(class_count));
    }
}

void apply_linear(const Layer& layer, const Shape3& in_shape, std::span<const double> in,
                  std::span<double> out) {
    const Shape3 out_shape = layer.output_shape(in_shape);
    if (in.size() != in_shape.size() || out.size() != out_shape.size()) {
        throw ShapeMismatchError("apply_linear buffer size mismatch");
    }
    std::fill(out.begin(), out.end(), 0.0);
    if (layer.kind == LayerKind::Dense) {
        const std::size_t n_in = in.size();
        for (std::size_t o = 0; o < out.size(); ++o) {
            const float* row = layer.weights.data() + o * n_in;
            double acc = 0.0;
            for (std::size_t i = 0; i < n_in; ++i) {
                acc += static_cast<double>(row[i]) * in[i];
            }
            out[o] = acc;
        }
        return;
    }
    for_each_connection(layer, in_shape,
                        [&](std::size_t o, std::size_t i, double w) { out[o] += w * in[i]; });
}

FanOut build_fan_out(const Layer& layer, const Shape3& in_shape) {
    const std::size_t n_in = in_shape.size();
    FanOut fan;
    fan.offsets.assign(n_in + 1, 0);
    for_each_connection(layer, in_shape,
                        [&](std::size_t, std::size_t i, double) { ++fan.offsets[i + 1]; });
    for (std::size_t i = 0; i < n_in; ++i) {
        fan.offsets[i + 1] += fan.offsets[i];
    }
    fan.targets.resize(fan.offsets.back());
    fan.weights.resize(fan.offsets.back());
    std::vector<std::size_t> cursor(fan.offsets.begin(), fan.offsets.end() - 1);
    for_each_connection(layer, in_shape, [&](std::size_t o, std::size_t i, double w) {
        const std::size_t at = cursor[i]++;
        fan.targets[at] = o;
        fan.weights[at] = w;
    });
    return fan;
}

}  // namespace snn_sim
