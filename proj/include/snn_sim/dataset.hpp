#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace snn_sim {

// Labeled images with pixels scaled to [0, 1].
struct Dataset {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> pixels;  // count * rows * cols, row-major
    std::vector<std::uint8_t> labels;  // empty for an images-only set

    [[nodiscard]] std::size_t size() const {
        return rows * cols == 0 ? 0 : pixels.size() / (rows * cols);
    }
    [[nodiscard]] bool has_labels() const { return !labels.empty(); }
    [[nodiscard]] std::size_t image_size() const { return rows * cols; }
    [[nodiscard]] std::span<const float> image(std::size_t i) const {
        return {pixels.data() + i * image_size(), image_size()};
    }
    // Views over every image, for calibration.
    [[nodiscard]] std::vector<std::span<const float>> image_views() const;
    // First n samples (or all, if n is 0 or larger than the set).
    [[nodiscard]] Dataset head(std::size_t n) const;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

// IDX files, plain or gzip-compressed. Throws DataError.
[[nodiscard]] Dataset read_idx_images(const std::filesystem::path& images);
[[nodiscard]] std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& labels);
[[nodiscard]] Dataset read_idx_dataset(const std::filesystem::path& images,
                                       const std::filesystem::path& labels);

}  // namespace snn_sim
