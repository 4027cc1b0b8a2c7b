#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include <zlib.h>

#include "genlab/error.hpp"
#include "genlab/tensor.hpp"

namespace genlab {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

enum class IdxKind : std::uint8_t { images, labels };

/// Undecoded IDX payload: unsigned bytes plus the dimension header.
struct IdxFile {
    IdxKind kind = IdxKind::images;
    std::vector<std::uint32_t> dims;  // {N, rows, cols} or {N}
    std::vector<std::uint8_t> payload;

    std::size_t count() const { return dims.empty() ? 0 : dims[0]; }
};

namespace detail {

inline std::uint32_t read_be32(std::span<const std::uint8_t> b, std::size_t off) {
    return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) | (std::uint32_t{b[off + 2]} << 8) |
           std::uint32_t{b[off + 3]};
}

inline void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline bool has_gz_suffix(const std::filesystem::path& p) { return p.extension() == ".gz"; }

inline std::vector<std::uint8_t> read_gzip(const std::filesystem::path& path) {
    gzFile f = gzopen(path.string().c_str(), "rb");
    if (f == nullptr) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> out;
    std::uint8_t buf[1 << 16];
    for (;;) {
        const int n = gzread(f, buf, sizeof buf);
        if (n < 0) {
            int code = 0;
            std::string msg = gzerror(f, &code);
            gzclose(f);
            throw FormatError("gzip error in " + path.string() + ": " + msg);
        }
        if (n == 0) break;
        out.insert(out.end(), buf, buf + n);
    }
    gzclose(f);
    return out;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    if (has_gz_suffix(path)) return read_gzip(path);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string hex_bytes(std::span<const std::uint8_t> b) {
    std::string s;
    char tmp[4];
    for (auto v : b) {
        std::snprintf(tmp, sizeof tmp, "%02x", v);
        if (!s.empty()) s += ' ';
        s += tmp;
    }
    return s;
}

}  // namespace detail

/// Parses an in-memory IDX container (magic 0x803 images or 0x801 labels).
inline IdxFile parse_idx(std::span<const std::uint8_t> bytes, const std::string& origin = "<memory>") {
    if (bytes.size() < 4) {
        throw FormatError(origin + ": truncated IDX header (" + std::to_string(bytes.size()) + " bytes)");
    }
    const std::uint32_t magic = detail::read_be32(bytes, 0);
    IdxFile file;
    std::size_t ndim;
    if (magic == kIdxImageMagic) {
        file.kind = IdxKind::images;
        ndim = 3;
    } else if (magic == kIdxLabelMagic) {
        file.kind = IdxKind::labels;
        ndim = 1;
    } else {
        throw FormatError(origin + ": unknown IDX magic bytes " + detail::hex_bytes(bytes.first(4)));
    }
    const std::size_t header = 4 + 4 * ndim;
    if (bytes.size() < header) {
        throw FormatError(origin + ": truncated IDX header, expected " + std::to_string(header) + " bytes, got " +
                          std::to_string(bytes.size()));
    }
    std::size_t expected = 1;
    for (std::size_t d = 0; d < ndim; ++d) {
        file.dims.push_back(detail::read_be32(bytes, 4 + 4 * d));
        expected *= file.dims.back();
    }
    const std::size_t actual = bytes.size() - header;
    if (actual != expected) {
        throw FormatError(origin + ": IDX payload has " + std::to_string(actual) + " bytes, header promises " +
                          std::to_string(expected));
    }
    file.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
    if (file.kind == IdxKind::labels) {
        for (auto l : file.payload) {
            if (l >= 10) throw DataError(origin + ": label " + std::to_string(l) + " outside [0, 10)");
        }
    }
    return file;
}

/// Reads an IDX file from disk; paths ending in ".gz" are decompressed.
inline IdxFile load_idx(const std::filesystem::path& path) {
    const auto bytes = detail::read_file_bytes(path);
    return parse_idx(bytes, path.string());
}

inline std::vector<std::uint8_t> encode_idx(const IdxFile& file) {
    std::vector<std::uint8_t> out;
    detail::write_be32(out, file.kind == IdxKind::images ? kIdxImageMagic : kIdxLabelMagic);
    for (auto d : file.dims) detail::write_be32(out, d);
    out.insert(out.end(), file.payload.begin(), file.payload.end());
    return out;
}

/// Images flattened to N x (rows * cols) in [0, 1], with matching labels.
struct IdxDataset {
    Tensor<float> images;
    std::vector<std::uint8_t> labels;
    std::uint32_t image_rows = 28;
    std::uint32_t image_cols = 28;

    std::size_t size() const { return labels.size(); }
    std::size_t width() const { return images.cols(); }
};

inline Tensor<float> decode_images(const IdxFile& file) {
    if (file.kind != IdxKind::images) throw FormatError("expected an IDX image file");
    const std::size_t n = file.dims[0], width = std::size_t{file.dims[1]} * file.dims[2];
    std::vector<float> pixels(file.payload.size());
    for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = static_cast<float>(file.payload[i]) / 255.0f;
    return Tensor<float>(Shape{n, width}, std::move(pixels));
}

/// Inverse of decode_images for pixels that came from bytes.
inline IdxFile encode_images(const Tensor<float>& images, std::uint32_t rows, std::uint32_t cols) {
    IdxFile file;
    file.kind = IdxKind::images;
    file.dims = {static_cast<std::uint32_t>(images.rows()), rows, cols};
    file.payload.reserve(images.size());
    for (float v : images.data()) file.payload.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0f)));
    return file;
}

inline IdxDataset make_dataset(const IdxFile& images, const IdxFile& labels) {
    if (images.kind != IdxKind::images || labels.kind != IdxKind::labels) {
        throw FormatError("make_dataset: expected an image file and a label file");
    }
    if (images.count() != labels.count()) {
        throw DataError("image count " + std::to_string(images.count()) + " differs from label count " +
                        std::to_string(labels.count()));
    }
    return IdxDataset{decode_images(images), labels.payload, images.dims[1], images.dims[2]};
}

enum class Split : std::uint8_t { train, test };

/// Locates "<prefix>-images-idx3-ubyte[.gz]" and the matching labels in `dir`.
inline IdxDataset load_mnist(const std::filesystem::path& dir, Split split) {
    const std::string prefix = split == Split::train ? "train" : "t10k";
    auto find = [&](const std::string& stem) {
        for (const auto& candidate : {dir / stem, dir / (stem + ".gz")}) {
            if (std::filesystem::exists(candidate)) return candidate;
        }
        throw IoError("MNIST file " + (dir / stem).string() + "[.gz] not found");
    };
    return make_dataset(load_idx(find(prefix + "-images-idx3-ubyte")), load_idx(find(prefix + "-labels-idx1-ubyte")));
}

}  // namespace genlab
