#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "snn_sim/dataset.hpp"
#include "snn_sim/network.hpp"
#include "snn_sim/weights_io.hpp"

namespace test_support {

inline std::filesystem::path source_dir() { return SNN_SIM_SOURCE_DIR; }
inline std::filesystem::path fixture_manifest() {
    return source_dir() / "tests/data/mlp_784_128_10.json";
}
inline std::filesystem::path mnist(const std::string& name) { return source_dir() / "data/mnist" / name; }

inline snn_sim::Dataset test_set(std::size_t n = 0) {
    return snn_sim::read_idx_dataset(mnist("test-images.idx3.gz"), mnist("test-labels.idx1.gz")).head(n);
}
inline snn_sim::Dataset calibration_set() { return snn_sim::read_idx_images(mnist("calib-images.idx3.gz")); }

inline snn_sim::Layer dense(std::size_t out, std::size_t in, std::vector<float> w, std::vector<float> b,
                            std::string activation = "relu") {
    snn_sim::Layer l;
    l.kind = snn_sim::LayerKind::Dense;
    l.name = "dense";
    l.activation = std::move(activation);
    l.weight_shape = {out, in};
    l.weights = std::move(w);
    l.bias = std::move(b);
    return l;
}

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("snn_sim_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace test_support
