#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace d3fcnn {

/// One decoded depth image: row-major unsigned millimeters, 0 = masked
/// background and never a valid foreground distance.
struct DepthFrame {
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::vector<std::uint16_t> depth;

  std::uint16_t at(std::int64_t row, std::int64_t col) const {
    return depth[std::size_t(row * width + col)];
  }
  std::uint16_t& at(std::int64_t row, std::int64_t col) {
    return depth[std::size_t(row * width + col)];
  }
};

/// Reads a 16-bit single-channel PNG or binary PGM (P5, maxval 65535),
/// sniffing the format from the file's leading bytes. Throws IoError when
/// the file cannot be opened, BadImageError for structural damage and
/// BitDepthError when the image is not 16-bit grayscale.
DepthFrame decode_frame(const std::string& path);

/// Writers used to build fixtures and synthetic datasets; both emit files
/// decode_frame accepts losslessly.
void write_pgm16(const DepthFrame& frame, const std::string& path);
void write_png16(const DepthFrame& frame, const std::string& path);

}  // namespace d3fcnn
