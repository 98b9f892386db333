#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace gem {

/// 8-bit RGB PNG encoder.
std::vector<std::uint8_t> encode_png_rgb(std::span<const std::uint8_t> rgb, std::size_t width, std::size_t height);

/// Maps values to a blue-white-red scale symmetric about zero: the largest
/// magnitude is full blue (negative) or full red (positive), zero is white.
/// Each source pixel becomes a zoom x zoom block.
std::vector<std::uint8_t> diverging_rgb(std::span<const double> values, std::size_t rows, std::size_t cols,
                                        std::size_t zoom = 1);

void write_diverging_png(const std::filesystem::path& path, std::span<const double> values, std::size_t rows,
                         std::size_t cols, std::size_t zoom = 1);

}  // namespace gem
