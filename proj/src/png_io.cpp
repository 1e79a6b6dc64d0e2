#include "sonolab/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

namespace sonolab {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Gray8Image to_gray8(const RealTensor& image, std::pair<double, double> range) {
  if (image.rank() != 2) throw Error(ErrorKind::schema, "to_gray8 expects a (z, x) image");
  const auto [lo, hi] = range;
  if (!(lo < hi)) throw Error(ErrorKind::parameter, "display range must be increasing");
  Gray8Image out{image.extent(0), image.extent(1), {}};
  out.pixels.reserve(image.size());
  for (double v : image.values()) {
    const double t = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
    out.pixels.push_back(static_cast<std::uint8_t>(std::lround(t * 255.0)));
  }
  return out;
}

Gray8Image side_by_side(const std::vector<Gray8Image>& images, std::size_t gap) {
  Gray8Image out;
  for (const auto& img : images) {
    out.height = std::max(out.height, img.height);
    out.width += img.width;
  }
  if (!images.empty()) out.width += gap * (images.size() - 1);
  out.pixels.assign(out.height * out.width, 0);
  std::size_t left = 0;
  for (const auto& img : images) {
    for (std::size_t r = 0; r < img.height; ++r) {
      std::copy_n(img.pixels.begin() + static_cast<std::ptrdiff_t>(r * img.width), img.width,
                  out.pixels.begin() + static_cast<std::ptrdiff_t>(r * out.width + left));
    }
    left += img.width + gap;
  }
  return out;
}

void write_png(const std::string& path, const Gray8Image& image) {
  if (image.height == 0 || image.width == 0 || image.pixels.size() != image.height * image.width) {
    throw Error(ErrorKind::parameter, "cannot write an empty or inconsistent image");
  }
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw Error(ErrorKind::io, "cannot open '" + path + "' for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(ErrorKind::io, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::io, "failed to encode '" + path + "'");
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  for (std::size_t r = 0; r < image.height; ++r) {
    png_write_row(png, image.pixels.data() + r * image.width);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Gray8Image read_png(const std::string& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw Error(ErrorKind::io, "cannot open '" + path + "'");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(ErrorKind::io, "libpng initialisation failed");
  }
  Gray8Image out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::format, "'" + path + "' is not a readable PNG");
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  if (png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY || png_get_bit_depth(png, info) != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::format, "'" + path + "' is not 8-bit grayscale");
  }
  out.width = png_get_image_width(png, info);
  out.height = png_get_image_height(png, info);
  out.pixels.resize(out.width * out.height);
  for (std::size_t r = 0; r < out.height; ++r) png_read_row(png, out.pixels.data() + r * out.width, nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

}  // namespace sonolab
