#include "gem/png.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <string_view>

#include "gem/binary_io.hpp"
#include "gem/error.hpp"

namespace gem {
namespace {

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void chunk(std::vector<std::uint8_t>& out, std::string_view type, std::span<const std::uint8_t> data) {
  put_be32(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t start = out.size();
  out.insert(out.end(), type.begin(), type.end());
  out.insert(out.end(), data.begin(), data.end());
  const uLong crc = crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
  put_be32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

std::vector<std::uint8_t> encode_png_rgb(std::span<const std::uint8_t> rgb, std::size_t width, std::size_t height) {
  if (width == 0 || height == 0 || rgb.size() != 3 * width * height) throw DimensionError("image buffer has the wrong size");

  std::vector<std::uint8_t> raw;
  raw.reserve(height * (1 + 3 * width));
  for (std::size_t r = 0; r < height; ++r) {
    raw.push_back(0);  // filter: none
    raw.insert(raw.end(), rgb.begin() + static_cast<std::ptrdiff_t>(3 * width * r),
               rgb.begin() + static_cast<std::ptrdiff_t>(3 * width * (r + 1)));
  }
  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> packed(packed_size);
  if (compress2(packed.data(), &packed_size, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK) {
    throw Error("zlib compression failed");
  }
  packed.resize(packed_size);

  std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<std::uint8_t> header;
  put_be32(header, static_cast<std::uint32_t>(width));
  put_be32(header, static_cast<std::uint32_t>(height));
  header.insert(header.end(), {8, 2, 0, 0, 0});  // 8-bit truecolor
  chunk(out, "IHDR", header);
  chunk(out, "IDAT", packed);
  chunk(out, "IEND", {});
  return out;
}

std::vector<std::uint8_t> diverging_rgb(std::span<const double> values, std::size_t rows, std::size_t cols,
                                        std::size_t zoom) {
  if (values.size() != rows * cols) throw DimensionError("image values do not match the declared shape");
  zoom = std::max<std::size_t>(zoom, 1);
  double scale = 0.0;
  for (double v : values) scale = std::max(scale, std::abs(v));
  const std::size_t width = cols * zoom;
  std::vector<std::uint8_t> rgb(3 * width * rows * zoom);
  for (std::size_t r = 0; r < rows * zoom; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const double t = scale > 0.0 ? values[(r / zoom) * cols + c / zoom] / scale : 0.0;
      const auto fade = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - std::abs(t))));
      std::uint8_t* px = &rgb[3 * (r * width + c)];
      if (t >= 0.0) {
        px[0] = 255;
        px[1] = fade;
        px[2] = fade;
      } else {
        px[0] = fade;
        px[1] = fade;
        px[2] = 255;
      }
    }
  }
  return rgb;
}

void write_diverging_png(const std::filesystem::path& path, std::span<const double> values, std::size_t rows,
                         std::size_t cols, std::size_t zoom) {
  zoom = std::max<std::size_t>(zoom, 1);
  write_file(path, encode_png_rgb(diverging_rgb(values, rows, cols, zoom), cols * zoom, rows * zoom));
}

}  // namespace gem
