#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "baa/errors.hpp"

namespace baa {

// Row-major 2D grid of doubles. Used for images, ground truths and
// prediction maps; value-range invariants are enforced by the consumers.
struct Grid {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // size == width * height

  Grid() = default;
  Grid(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {
    if (w < 1 || h < 1) throw DimensionError("Grid dimensions must be >= 1");
  }

  double& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return data.size(); }

  bool same_shape(const Grid& other) const {
    return width == other.width && height == other.height;
  }
};

// Thresholded edge/non-edge map.
struct BinaryMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;  // 0 or 1, row-major

  BinaryMap() = default;
  BinaryMap(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), bits(static_cast<std::size_t>(w) * h, fill) {
    if (w < 1 || h < 1) throw DimensionError("BinaryMap dimensions must be >= 1");
  }

  std::uint8_t& at(int x, int y) { return bits[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return bits.size(); }

  bool same_shape(const BinaryMap& other) const {
    return width == other.width && height == other.height;
  }
};

inline void require_same_shape(const Grid& a, const Grid& b, const std::string& who) {
  if (!a.same_shape(b))
    throw DimensionError(who + ": grids are " + std::to_string(a.width) + "x" +
                         std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                         std::to_string(b.height));
}

}  // namespace baa
