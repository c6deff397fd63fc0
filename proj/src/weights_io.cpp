#include "snn_sim/weights_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <json.hpp>

#include "snn_sim/errors.hpp"

namespace snn_sim {

namespace {

using nlohmann::json;

static_assert(std::numeric_limits<float>::is_iec559 && sizeof(float) == 4);

std::size_t product(const std::vector<std::size_t>& dims) {
    std::size_t n = 1;
    for (auto d : dims) {
        n *= d;
    }
    return n;
}

void put_floats(std::vector<std::uint8_t>& blob, const std::vector<float>& values) {
    for (float v : values) {
        auto bits = std::bit_cast<std::uint32_t>(v);
        for (int b = 0; b < 4; ++b) {
            blob.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
        }
    }
}

std::vector<float> get_floats(std::span<const std::uint8_t> blob, std::size_t offset, std::size_t count) {
    std::vector<float> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint8_t* p = blob.data() + offset + 4 * i;
        const std::uint32_t bits = std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) |
                                   (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
        out[i] = std::bit_cast<float>(bits);
    }
    return out;
}

LayerKind parse_kind(const std::string& s) {
    if (s == "dense") {
        return LayerKind::Dense;
    }
    if (s == "conv2d") {
        return LayerKind::Conv2D;
    }
    if (s == "avgpool") {
        return LayerKind::AvgPool;
    }
    throw UnknownLayerKindError("unknown layer kind '" + s + "'");
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open '" + path.string() + "'");
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const void* data, std::size_t size) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) {
        throw DataError("write failed for '" + path.string() + "'");
    }
}

}  // namespace

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    std::size_t done = 0;
    while (done < bytes.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
        crc = crc32(crc, bytes.data() + done, chunk);
        done += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

std::filesystem::path blob_path_for(const std::filesystem::path& manifest_path) {
    auto p = manifest_path;
    return p.replace_extension(".bin");
}

EncodedBundle encode_bundle(const WeightsBundle& bundle, const std::string& blob_name) {
    const NetworkSpec& spec = bundle.spec;
    spec.validate();

    EncodedBundle enc;
    json layers = json::array();
    for (const auto& layer : spec.layers) {
        json l;
        l["kind"] = to_string(layer.kind);
        l["name"] = layer.name;
        l["activation"] = layer.activation;
        l["threshold"] = layer.threshold;
        if (layer.kind == LayerKind::AvgPool) {
            l["size"] = layer.pool_size;
        } else {
            if (layer.kind == LayerKind::Conv2D) {
                l["stride"] = layer.stride;
                l["padding"] = layer.padding;
            }
            l["weights"] = {{"offset", enc.blob.size()}, {"shape", layer.weight_shape}};
            put_floats(enc.blob, layer.weights);
            l["bias"] = {{"offset", enc.blob.size()},
                         {"shape", std::vector<std::size_t>{layer.bias.size()}}};
            put_floats(enc.blob, layer.bias);
        }
        layers.push_back(std::move(l));
    }

    json m;
    m["format"] = kWeightsFormatName;
    m["format_version"] = kWeightsFormatVersion;
    m["input_shape"] = spec.input_shape;
    m["class_count"] = spec.class_count;
    m["normalized"] = spec.normalized;
    m["layers"] = std::move(layers);
    m["blob"] = {{"file", blob_name}, {"bytes", enc.blob.size()}, {"crc32", crc32_of(enc.blob)}};
    if (bundle.stats) {
        m["activation_stats"] = {{"percentile", bundle.stats->percentile},
                                 {"values", bundle.stats->values}};
    }
    if (!bundle.datasets.empty()) {
        m["datasets"] = bundle.datasets;
    }
    enc.manifest = m.dump(2) + "\n";
    return enc;
}

WeightsBundle decode_bundle(const std::string& manifest, std::span<const std::uint8_t> blob) {
    json m;
    try {
        m = json::parse(manifest);
    } catch (const json::exception& e) {
        throw FormatError(std::string("manifest is not valid JSON: ") + e.what());
    }

    try {
        const int version = m.at("format_version").get<int>();
        if (version != kWeightsFormatVersion) {
            throw VersionError("unsupported format_version " + std::to_string(version) +
                               " (expected " + std::to_string(kWeightsFormatVersion) + ")");
        }

        WeightsBundle bundle;
        NetworkSpec& spec = bundle.spec;
        spec.input_shape = m.at("input_shape").get<std::vector<std::size_t>>();
        spec.class_count = m.at("class_count").get<std::size_t>();
        spec.normalized = m.value("normalized", false);

        std::size_t expected_bytes = 0;
        for (const auto& l : m.at("layers")) {
            Layer layer;
            layer.kind = parse_kind(l.at("kind").get<std::string>());
            layer.name = l.value("name", std::string{});
            layer.activation =
                l.value("activation", std::string(layer.kind == LayerKind::AvgPool ? "none" : "relu"));
            layer.threshold = l.value("threshold", 1.0);
            if (layer.kind == LayerKind::AvgPool) {
                layer.pool_size = l.value("size", std::size_t{2});
            } else {
                layer.stride = l.value("stride", std::size_t{1});
                layer.padding = l.value("padding", std::size_t{0});
                layer.weight_shape = l.at("weights").at("shape").get<std::vector<std::size_t>>();
                const auto bias_shape = l.at("bias").at("shape").get<std::vector<std::size_t>>();
                const std::size_t w_off = l.at("weights").at("offset").get<std::size_t>();
                const std::size_t b_off = l.at("bias").at("offset").get<std::size_t>();
                const std::size_t w_count = product(layer.weight_shape);
                const std::size_t b_count = product(bias_shape);
                if (w_off != expected_bytes || b_off != w_off + 4 * w_count) {
                    throw LayerShapeError("layer '" + layer.name +
                                          "' offsets are not contiguous in manifest order");
                }
                expected_bytes = b_off + 4 * b_count;
                layer.weights.resize(w_count);
                layer.bias.resize(b_count);
            }
            spec.layers.push_back(std::move(layer));
        }

        const auto& b = m.at("blob");
        const std::size_t declared = b.at("bytes").get<std::size_t>();
        if (blob.size() != expected_bytes || declared != expected_bytes) {
            throw BlobLengthError("blob length mismatch: expected " + std::to_string(expected_bytes) +
                                  " bytes, actual " + std::to_string(blob.size()) +
                                  " (manifest declares " + std::to_string(declared) + ")");
        }
        std::size_t offset = 0;
        for (auto& layer : spec.layers) {
            if (!layer.has_weights()) {
                continue;
            }
            layer.weights = get_floats(blob, offset, layer.weights.size());
            offset += 4 * layer.weights.size();
            layer.bias = get_floats(blob, offset, layer.bias.size());
            offset += 4 * layer.bias.size();
        }

        const std::uint32_t crc = b.at("crc32").get<std::uint32_t>();
        const std::uint32_t actual = crc32_of(blob);
        if (crc != actual) {
            throw ChecksumError("blob CRC-32 mismatch: manifest " + std::to_string(crc) +
                                ", blob " + std::to_string(actual));
        }

        try {
            spec.validate();
        } catch (const Error& e) {
            throw LayerShapeError(std::string("layer shapes do not compose: ") + e.what());
        }

        if (m.contains("activation_stats")) {
            ActivationStats stats;
            stats.percentile = m["activation_stats"].at("percentile").get<double>();
            stats.values = m["activation_stats"].at("values").get<std::vector<double>>();
            bundle.stats = std::move(stats);
        }
        if (m.contains("datasets")) {
            bundle.datasets = m["datasets"].get<std::map<std::string, std::string>>();
        }
        return bundle;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed manifest: ") + e.what());
    }
}

WeightsBundle load_bundle(const std::filesystem::path& manifest_path,
                          const std::filesystem::path& blob_path) {
    const auto text = read_file(manifest_path);
    const auto blob = read_file(blob_path);
    return decode_bundle(std::string(text.begin(), text.end()), blob);
}

WeightsBundle load_bundle(const std::filesystem::path& manifest_path) {
    const auto text = read_file(manifest_path);
    std::filesystem::path blob = blob_path_for(manifest_path);
    try {
        const auto m = json::parse(text.begin(), text.end());
        if (m.contains("blob") && m["blob"].contains("file")) {
            blob = manifest_path.parent_path() / m["blob"]["file"].get<std::string>();
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("manifest is not valid JSON: ") + e.what());
    }
    return load_bundle(manifest_path, blob);
}

void save_bundle(const WeightsBundle& bundle, const std::filesystem::path& manifest_path,
                 const std::filesystem::path& blob_path) {
    const EncodedBundle enc = encode_bundle(bundle, blob_path.filename().string());
    write_file(blob_path, enc.blob.data(), enc.blob.size());
    write_file(manifest_path, enc.manifest.data(), enc.manifest.size());
}

}  // namespace snn_sim
