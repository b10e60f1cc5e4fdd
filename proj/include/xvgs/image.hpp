// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace xvgs {

/// Row-major H x W x 3 image of doubles, normally in [0, 1].
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(int width, int height, double fill = 0.0)
      : width_(width), height_(height) {
    if (width <= 0 || height <= 0)
      throw std::invalid_argument("ImageBuffer: non-positive dimensions");
    pixels_.assign(static_cast<size_t>(width) * height * 3, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  size_t pixel_count() const { return static_cast<size_t>(width_) * height_; }

  double& at(int x, int y, int c) { return pixels_[index(x, y, c)]; }
  double at(int x, int y, int c) const { return pixels_[index(x, y, c)]; }

  std::vector<double>& data() { return pixels_; }
  const std::vector<double>& data() const { return pixels_; }

  bool same_shape(const ImageBuffer& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

 private:
  size_t index(int x, int y, int c) const {
    return (static_cast<size_t>(y) * width_ + x) * 3 + c;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> pixels_;
};

inline uint8_t quantize_channel(double v) {
  double q = std::round(v * 255.0);
  if (q < 0.0) q = 0.0;
  if (q > 255.0) q = 255.0;
  return static_cast<uint8_t>(q);
}

/// Round-trip of the 8-bit file representation: round(255 v) / 255 per channel.
inline ImageBuffer quantize8(const ImageBuffer& img) {
  ImageBuffer out(img.width(), img.height());
  for (size_t i = 0; i < img.data().size(); ++i)
    out.data()[i] = quantize_channel(img.data()[i]) / 255.0;
  return out;
}

inline void write_ppm(const std::filesystem::path& path, const ImageBuffer& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_ppm: cannot open " + path.string());
  out << "P6\n" << img.width() << " " << img.height() << "\n255\n";
  std::vector<uint8_t> row(static_cast<size_t>(img.width()) * 3);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c)
        row[static_cast<size_t>(x) * 3 + c] = quantize_channel(img.at(x, y, c));
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw std::runtime_error("write_ppm: write failed for " + path.string());
}

namespace detail {
/// Reads one whitespace-delimited PPM header token, skipping '#' comments.
inline std::string ppm_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {}
    } else if (!std::isspace(ch)) {
      tok.push_back(static_cast<char>(ch));
      while ((ch = in.get()) != EOF && !std::isspace(ch)) tok.push_back(static_cast<char>(ch));
      return tok;
    }
  }
  return tok;
}
}  // namespace detail

inline ImageBuffer read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_ppm: cannot open " + path.string());
  if (detail::ppm_token(in) != "P6")
    throw std::runtime_error("read_ppm: not a binary PPM: " + path.string());
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(detail::ppm_token(in));
    height = std::stoi(detail::ppm_token(in));
    maxval = std::stoi(detail::ppm_token(in));
  } catch (const std::exception&) {
    throw std::runtime_error("read_ppm: malformed header: " + path.string());
  }
  if (width <= 0 || height <= 0)
    throw std::runtime_error("read_ppm: malformed header: " + path.string());
  if (maxval != 255)
    throw std::runtime_error("read_ppm: only 8-bit images supported: " + path.string());
  // The header's final whitespace byte was already consumed by ppm_token.
  ImageBuffer img(width, height);
  std::vector<uint8_t> raw(static_cast<size_t>(width) * height * 3);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<size_t>(in.gcount()) != raw.size())
    throw std::runtime_error("read_ppm: truncated pixel data: " + path.string());
  for (size_t i = 0; i < raw.size(); ++i) img.data()[i] = raw[i] / 255.0;
  return img;
}

}  // namespace xvgs
