#pragma once

// Two-file weights bundle: a JSON manifest plus a raw blob.
//
// The blob holds little-endian IEEE-754 float32 values, row-major, with
// each weight layer's weights followed by its bias, in manifest order. The
// manifest records every tensor's byte offset and shape, the blob size and
// its CRC-32. Output is canonical (sorted keys, two-space indent, trailing
// newline), so saving a loaded bundle reproduces it byte for byte.
// See docs/weights_format.md.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "snn_sim/conversion.hpp"
#include "snn_sim/network.hpp"

namespace snn_sim {

inline constexpr int kWeightsFormatVersion = 1;
inline constexpr const char* kWeightsFormatName = "snn-sim-weights";

struct WeightsBundle {
    NetworkSpec spec;
    std::optional<ActivationStats> stats;
    // Named dataset files the bundle was built from, e.g. "calibration_images".
    // Paths are stored as given; written only when non-empty.
    std::map<std::string, std::string> datasets;
};

// Throws VersionError, UnknownLayerKindError, LayerShapeError,
// BlobLengthError, ChecksumError (all FormatError) or DataError.
[[nodiscard]] WeightsBundle load_bundle(const std::filesystem::path& manifest_path,
                                        const std::filesystem::path& blob_path);
// Resolves the blob from the manifest's "blob.file", relative to the manifest.
[[nodiscard]] WeightsBundle load_bundle(const std::filesystem::path& manifest_path);

// Writes both files. The manifest names the blob by its file name.
void save_bundle(const WeightsBundle& bundle, const std::filesystem::path& manifest_path,
                 const std::filesystem::path& blob_path);

// In-memory encoding used by save_bundle.
struct EncodedBundle {
    std::string manifest;
    std::vector<std::uint8_t> blob;
};
[[nodiscard]] EncodedBundle encode_bundle(const WeightsBundle& bundle, const std::string& blob_name);
[[nodiscard]] WeightsBundle decode_bundle(const std::string& manifest,
                                          std::span<const std::uint8_t> blob);

[[nodiscard]] std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);

// Default blob path for a manifest: same stem, ".bin".
[[nodiscard]] std::filesystem::path blob_path_for(const std::filesystem::path& manifest_path);

}  // namespace snn_sim
