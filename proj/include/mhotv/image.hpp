#pragma once

#include <string>

#include "mhotv/errors.hpp"
#include "mhotv/spectral.hpp"

namespace mhotv {

/// Extent of the unknown: a 1-D signal (rows == 1) or a row-major image.
struct Shape {
  Eigen::Index rows = 1;
  Eigen::Index cols = 0;
  int dims = 1;

  static Shape line(Eigen::Index n) { return {1, n, 1}; }
  static Shape image(Eigen::Index rows, Eigen::Index cols) { return {rows, cols, 2}; }

  Eigen::Index size() const { return rows * cols; }
  bool operator==(const Shape&) const = default;

  std::string str() const {
    return dims == 1 ? std::to_string(cols)
                     : std::to_string(rows) + "x" + std::to_string(cols);
  }
};

/// Row-major image; pixel (r, c) is pixels[r * cols + c].
struct Image {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Signal pixels;

  Image() = default;
  Image(Eigen::Index r, Eigen::Index c) : rows(r), cols(c), pixels(Signal::Zero(r * c)) {}
  Image(Eigen::Index r, Eigen::Index c, Signal data) : rows(r), cols(c), pixels(std::move(data)) {
    if (pixels.size() != r * c)
      detail::fail<ShapeMismatch>("Image: " + std::to_string(pixels.size()) +
                                  " pixels do not fill " + std::to_string(r) + "x" +
                                  std::to_string(c));
  }

  double& operator()(Eigen::Index r, Eigen::Index c) { return pixels[r * cols + c]; }
  double operator()(Eigen::Index r, Eigen::Index c) const { return pixels[r * cols + c]; }
  Shape shape() const { return Shape::image(rows, cols); }
};

}  // namespace mhotv
