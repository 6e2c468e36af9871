#pragma once

#include <cstddef>
#include <vector>

#include "gsrecon/geometry.hpp"

namespace gsr {

/// Interleaved floating-point image with values nominally in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

  double& at(int i, int j, int c) {
    return data[(static_cast<std::size_t>(j) * width + i) * channels + c];
  }
  double at(int i, int j, int c) const {
    return data[(static_cast<std::size_t>(j) * width + i) * channels + c];
  }
  Vec3 rgb(int i, int j) const { return {at(i, j, 0), at(i, j, 1), at(i, j, 2)}; }
  bool same_shape(const Image& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
  bool operator==(const Image&) const = default;
};

}  // namespace gsr
