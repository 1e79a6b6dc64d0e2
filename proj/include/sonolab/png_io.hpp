#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sonolab/tensor.hpp"

namespace sonolab {

struct Gray8Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  std::uint8_t operator()(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
};

/// Maps [range.first, range.second] onto 0..255, clamping outside.
/// image must be (z, x).
Gray8Image to_gray8(const RealTensor& image, std::pair<double, double> range);

/// Places images left to right, top-aligned, with a black gap.
Gray8Image side_by_side(const std::vector<Gray8Image>& images, std::size_t gap = 4);

/// 8-bit grayscale PNG without ancillary chunks, so output bytes depend
/// only on pixel data.
void write_png(const std::string& path, const Gray8Image& image);
Gray8Image read_png(const std::string& path);

}  // namespace sonolab
