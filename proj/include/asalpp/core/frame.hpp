#pragma once

#include <cstdint>
#include <vector>

#include "asalpp/core/rng.hpp"

namespace asalpp {

/// 8-bit RGB image, row-major, 3 bytes per pixel.
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Frame() = default;
  Frame(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t* pixel(int x, int y) { return rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x); }
  const std::uint8_t* pixel(int x, int y) const {
    return rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x);
  }

  bool operator==(const Frame& other) const = default;
};

inline std::uint64_t frame_hash(const Frame& f) { return fnv1a64(f.rgb.data(), f.rgb.size()); }

/// Bilinear resize (half-pixel centers, no corner alignment).
inline Frame resize_bilinear(const Frame& src, int out_w, int out_h) {
  Frame dst(out_w, out_h);
  if (src.width <= 0 || src.height <= 0) return dst;
  const double sx = static_cast<double>(src.width) / out_w;
  const double sy = static_cast<double>(src.height) / out_h;
  for (int y = 0; y < out_h; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    double wy = fy - y0;
    int y1 = y0 + 1;
    y0 = std::min(std::max(y0, 0), src.height - 1);
    y1 = std::min(std::max(y1, 0), src.height - 1);
    for (int x = 0; x < out_w; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      double wx = fx - x0;
      int x1 = x0 + 1;
      x0 = std::min(std::max(x0, 0), src.width - 1);
      x1 = std::min(std::max(x1, 0), src.width - 1);
      const std::uint8_t* p00 = src.pixel(x0, y0);
      const std::uint8_t* p10 = src.pixel(x1, y0);
      const std::uint8_t* p01 = src.pixel(x0, y1);
      const std::uint8_t* p11 = src.pixel(x1, y1);
      std::uint8_t* out = dst.pixel(x, y);
      for (int c = 0; c < 3; ++c) {
        double top = p00[c] * (1.0 - wx) + p10[c] * wx;
        double bot = p01[c] * (1.0 - wx) + p11[c] * wx;
        double v = top * (1.0 - wy) + bot * wy;
        out[c] = static_cast<std::uint8_t>(std::lround(std::min(std::max(v, 0.0), 255.0)));
      }
    }
  }
  return dst;
}

}  // namespace asalpp
