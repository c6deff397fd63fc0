#include "snn_sim/dataset.hpp"

#include <zlib.h>

#include <array>
#include <memory>
#include <string>

#include "snn_sim/errors.hpp"

namespace snn_sim {

namespace {

struct GzCloser {
    void operator()(gzFile f) const { gzclose(f); }
};
using GzHandle = std::unique_ptr<std::remove_pointer_t<gzFile>, GzCloser>;

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
    GzHandle f(gzopen(path.string().c_str(), "rb"));
    if (!f) {
        throw DataError("cannot open '" + path.string() + "'");
    }
    std::vector<std::uint8_t> data;
    std::array<std::uint8_t, 1 << 16> buf{};
    for (;;) {
        const int n = gzread(f.get(), buf.data(), static_cast<unsigned>(buf.size()));
        if (n < 0) {
            throw DataError("read error in '" + path.string() + "'");
        }
        if (n == 0) {
            break;
        }
        data.insert(data.end(), buf.begin(), buf.begin() + n);
    }
    return data;
}

std::uint32_t be32(const std::vector<std::uint8_t>& d, std::size_t at) {
    return (std::uint32_t{d[at]} << 24) | (std::uint32_t{d[at + 1]} << 16) |
           (std::uint32_t{d[at + 2]} << 8) | std::uint32_t{d[at + 3]};
}

struct Idx {
    std::vector<std::size_t> dims;
    std::vector<std::uint8_t> bytes;
    std::size_t payload = 0;
};

Idx parse(const std::filesystem::path& path, std::uint32_t magic) {
    Idx idx;
    idx.bytes = read_all(path);
    if (idx.bytes.size() < 4 || be32(idx.bytes, 0) != magic) {
        throw DataError("'" + path.string() + "' is not an IDX file with magic 0x" +
                        (magic == kIdxImageMagic ? std::string("00000803") : std::string("00000801")));
    }
    const std::size_t ndim = magic & 0xFFu;
    if (idx.bytes.size() < 4 + 4 * ndim) {
        throw DataError("'" + path.string() + "' has a truncated header");
    }
    std::size_t count = 1;
    for (std::size_t i = 0; i < ndim; ++i) {
        idx.dims.push_back(be32(idx.bytes, 4 + 4 * i));
        count *= idx.dims.back();
    }
    idx.payload = 4 + 4 * ndim;
    if (idx.bytes.size() - idx.payload != count) {
        throw DataError("'" + path.string() + "' holds " +
                        std::to_string(idx.bytes.size() - idx.payload) + " data bytes, header says " +
                        std::to_string(count));
    }
    return idx;
}

}  // namespace

std::vector<std::span<const float>> Dataset::image_views() const {
    std::vector<std::span<const float>> views;
    views.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) {
        views.push_back(image(i));
    }
    return views;
}

Dataset Dataset::head(std::size_t n) const {
    if (n == 0 || n >= size()) {
        return *this;
    }
    Dataset d;
    d.rows = rows;
    d.cols = cols;
    d.pixels.assign(pixels.begin(), pixels.begin() + static_cast<std::ptrdiff_t>(n * image_size()));
    if (has_labels()) {
        d.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n));
    }
    return d;
}

Dataset read_idx_images(const std::filesystem::path& images) {
    const Idx idx = parse(images, kIdxImageMagic);
    Dataset d;
    d.rows = idx.dims[1];
    d.cols = idx.dims[2];
    d.pixels.resize(idx.bytes.size() - idx.payload);
    for (std::size_t i = 0; i < d.pixels.size(); ++i) {
        d.pixels[i] = static_cast<float>(idx.bytes[idx.payload + i]) / 255.0f;
    }
    return d;
}

std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& labels) {
    const Idx idx = parse(labels, kIdxLabelMagic);
    return {idx.bytes.begin() + static_cast<std::ptrdiff_t>(idx.payload), idx.bytes.end()};
}

Dataset read_idx_dataset(const std::filesystem::path& images, const std::filesystem::path& labels) {
    Dataset d = read_idx_images(images);
    auto l = read_idx_labels(labels);
    if (l.size() != d.size()) {
        throw DataError("image file has " + std::to_string(d.size()) + " entries, label file has " +
                        std::to_string(l.size()));
    }
    d.labels = std::move(l);
    return d;
}

}  // namespace snn_sim
