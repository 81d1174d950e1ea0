#include "data/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include "core/errors.hpp"

namespace d3fcnn {

namespace {

constexpr unsigned char kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
  (void)png;
  throw BadImageError(std::string("png: ") + msg);
}

void png_warn_fn(png_structp, png_const_charp) {}

DepthFrame decode_png(std::FILE* f, const std::string& path) {
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warn_fn);
  if (!png) throw Error("png: reader allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error("png: info allocation failed");
  }

  DepthFrame frame;
  try {
    png_init_io(png, f);
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);
    if (color != PNG_COLOR_TYPE_GRAY) {
      throw BitDepthError(path + ": depth frames must be single-channel grayscale");
    }
    if (bit_depth != 16) {
      throw BitDepthError(path + ": expected 16-bit pixels, file has " +
                          std::to_string(bit_depth));
    }
    png_set_swap(png);  // PNG stores big-endian words; we want host order

    frame.width = std::int64_t(w);
    frame.height = std::int64_t(h);
    frame.depth.resize(std::size_t(w) * h);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 r = 0; r < h; ++r) {
      rows[r] = reinterpret_cast<png_bytep>(frame.depth.data() + std::size_t(r) * w);
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return frame;
}

// Minimal binary-PGM reader: "P5", whitespace/comment separated width,
// height, maxval, single whitespace byte, then big-endian 16-bit samples.
DepthFrame decode_pgm(std::ifstream& f, const std::string& path) {
  auto next_token = [&]() -> std::string {
    std::string tok;
    int c;
    while ((c = f.get()) != EOF) {
      if (c == '#') {
        while ((c = f.get()) != EOF && c != '\n') {
        }
        continue;
      }
      if (std::isspace(c)) {
        if (!tok.empty()) return tok;
        continue;
      }
      tok.push_back(char(c));
    }
    if (tok.empty()) throw BadImageError(path + ": pgm header ends early");
    return tok;
  };

  const std::string magic = next_token();
  if (magic != "P5") throw BadImageError(path + ": not a binary pgm (magic " + magic + ")");
  long w = 0, h = 0, maxval = 0;
  try {
    w = std::stol(next_token());
    h = std::stol(next_token());
    maxval = std::stol(next_token());
  } catch (const std::exception&) {
    throw BadImageError(path + ": pgm header fields are not numbers");
  }
  if (w <= 0 || h <= 0) throw BadImageError(path + ": pgm dimensions must be positive");
  if (maxval < 256) throw BitDepthError(path + ": expected 16-bit pixels, maxval " +
                                        std::to_string(maxval));
  if (maxval > 65535) throw BadImageError(path + ": pgm maxval exceeds 16 bits");

  DepthFrame frame;
  frame.width = w;
  frame.height = h;
  frame.depth.resize(std::size_t(w) * std::size_t(h));
  std::vector<unsigned char> raw(frame.depth.size() * 2);
  f.read(reinterpret_cast<char*>(raw.data()), std::streamsize(raw.size()));
  if (std::size_t(f.gcount()) != raw.size())
    throw BadImageError(path + ": pgm pixel data ends early");
  for (std::size_t i = 0; i < frame.depth.size(); ++i) {
    frame.depth[i] = std::uint16_t((raw[2 * i] << 8) | raw[2 * i + 1]);
  }
  return frame;
}

}  // namespace

DepthFrame decode_frame(const std::string& path) {
  std::ifstream sniff(path, std::ios::binary);
  if (!sniff) throw IoError("cannot open image " + path);
  unsigned char head[8] = {};
  sniff.read(reinterpret_cast<char*>(head), 8);
  const std::streamsize got = sniff.gcount();

  if (got >= 8 && std::memcmp(head, kPngSig, 8) == 0) {
    sniff.close();
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw IoError("cannot open image " + path);
    return decode_png(f.get(), path);
  }
  if (got >= 2 && head[0] == 'P' && head[1] == '5') {
    sniff.clear();  // the sniff read may have tripped eof on tiny files
    sniff.seekg(0);
    return decode_pgm(sniff, path);
  }
  throw BadImageError(path + ": neither a png nor a binary pgm");
}

void write_pgm16(const DepthFrame& frame, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << "P5\n" << frame.width << " " << frame.height << "\n65535\n";
  std::vector<unsigned char> raw(frame.depth.size() * 2);
  for (std::size_t i = 0; i < frame.depth.size(); ++i) {
    raw[2 * i] = (unsigned char)(frame.depth[i] >> 8);
    raw[2 * i + 1] = (unsigned char)(frame.depth[i] & 0xff);
  }
  f.write(reinterpret_cast<const char*>(raw.data()), std::streamsize(raw.size()));
  if (!f) throw IoError("short write to " + path);
}

void write_png16(const DepthFrame& frame, const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw IoError("cannot open " + path + " for writing");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warn_fn);
  if (!png) throw Error("png: writer allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("png: info allocation failed");
  }
  try {
    png_init_io(png, f.get());
    png_set_IHDR(png, info, png_uint_32(frame.width), png_uint_32(frame.height), 16,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_set_swap(png);
    std::vector<png_bytep> rows(std::size_t(frame.height));
    for (std::int64_t r = 0; r < frame.height; ++r) {
      rows[std::size_t(r)] = reinterpret_cast<png_bytep>(
          const_cast<std::uint16_t*>(frame.depth.data() + r * frame.width));
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
}

}  // namespace d3fcnn
