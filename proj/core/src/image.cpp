#include "gdiff/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "gdiff/errors.hpp"

namespace gdiff {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Decodes any PNG to packed 8-bit RGB rows.
std::vector<unsigned char> decode_rgb8(const std::string& path, int& width,
                                       int& height) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open '" + path + "' for reading");

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng: read struct allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng: info struct allocation failed");
  }
  std::vector<unsigned char> data;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("failed to decode PNG '" + path + "'");
  }
  png_init_io(png, file.get());
  png_read_info(png, info);

  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  const size_t stride = png_get_rowbytes(png, info);
  data.resize(stride * height);
  rows.resize(height);
  for (int y = 0; y < height; ++y) rows[y] = data.data() + stride * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return data;
}

}  // namespace

RGBImage RGBImage::zero(int width, int height) {
  if (width < 1 || height < 1) throw ParameterError("image: empty dimensions");
  RGBImage img;
  img.width = width;
  img.height = height;
  for (auto& p : img.planes)
    p.assign(static_cast<size_t>(width) * height, 0.0);
  return img;
}

RGBImage RGBImage::constant(int width, int height,
                            const std::array<double, 3>& value) {
  RGBImage img = zero(width, height);
  for (int c = 0; c < 3; ++c)
    std::fill(img.planes[c].begin(), img.planes[c].end(), value[c]);
  return img;
}

RGBImage read_png(const std::string& path) {
  int width = 0, height = 0;
  std::vector<unsigned char> rgb = decode_rgb8(path, width, height);
  RGBImage img = RGBImage::zero(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(c, y, x) =
            rgb[(static_cast<size_t>(y) * width + x) * 3 + c] / 255.0;
  return img;
}

std::vector<double> read_png_gray(const std::string& path, int& width,
                                  int& height) {
  std::vector<unsigned char> rgb = decode_rgb8(path, width, height);
  std::vector<double> gray(static_cast<size_t>(width) * height);
  for (size_t i = 0; i < gray.size(); ++i)
    gray[i] = (rgb[i * 3] + rgb[i * 3 + 1] + rgb[i * 3 + 2]) / (3.0 * 255.0);
  return gray;
}

void write_png(const RGBImage& image, const std::string& path) {
  if (image.width < 1 || image.height < 1)
    throw ParameterError("write_png: empty image");
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot open '" + path + "' for writing");

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng: write struct allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng: info struct allocation failed");
  }
  std::vector<unsigned char> row(static_cast<size_t>(image.width) * 3);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed to encode PNG '" + path + "'");
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < 3; ++c) {
        double v = std::clamp(image.at(c, y, x), 0.0, 1.0);
        row[static_cast<size_t>(x) * 3 + c] =
            static_cast<unsigned char>(std::lround(v * 255.0));
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace gdiff
