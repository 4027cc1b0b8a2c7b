#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>

#include "genlab/app/atomic_file.hpp"
#include "genlab/error.hpp"
#include "genlab/tensor.hpp"

namespace genlab {

/// clamp(v, 0, 1) * 255 rounded half up.
inline std::uint8_t quantize_pixel(double v) {
    if (std::isnan(v)) throw DataError("quantize_pixel: NaN pixel");
    return static_cast<std::uint8_t>(std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5));
}

/// Binary PGM bytes for K square-ish tiles laid out `cols` per row; the
/// grid has ceil(K / cols) rows and unused tiles stay black.
inline std::string encode_pgm_grid(const Tensor<float>& images, std::size_t cols, std::size_t tile_rows = 28,
                                   std::size_t tile_cols = 28) {
    if (images.rank() != 2 || images.rows() == 0) throw ContractError("write_pgm_grid: need a nonempty K x pixels matrix");
    if (cols == 0) throw ConfigError("write_pgm_grid: cols must be positive");
    if (images.cols() != tile_rows * tile_cols) {
        throw DimensionError("write_pgm_grid: images have " + std::to_string(images.cols()) + " pixels, tiles need " +
                             std::to_string(tile_rows * tile_cols));
    }
    const std::size_t k = images.rows();
    const std::size_t grid_rows = (k + cols - 1) / cols;
    const std::size_t width = cols * tile_cols, height = grid_rows * tile_rows;
    std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    const std::size_t header = out.size();
    out.resize(header + width * height, '\0');
    for (std::size_t i = 0; i < k; ++i) {
        const auto row = images.row(i);
        const std::size_t top = (i / cols) * tile_rows, left = (i % cols) * tile_cols;
        for (std::size_t y = 0; y < tile_rows; ++y) {
            for (std::size_t x = 0; x < tile_cols; ++x) {
                out[header + (top + y) * width + left + x] = static_cast<char>(quantize_pixel(row[y * tile_cols + x]));
            }
        }
    }
    return out;
}

inline void write_pgm_grid(const Tensor<float>& images, std::size_t cols, const std::filesystem::path& path) {
    write_file_atomic(path, encode_pgm_grid(images, cols));
}

}  // namespace genlab
