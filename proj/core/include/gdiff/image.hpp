#pragma once

#include <array>
#include <string>
#include <vector>

namespace gdiff {

/// RGB image with separate row-major channel planes; values nominally in
/// [0,1]. 8-bit PNG codes are mapped linearly (c / 255), a documented
/// simplification (no gamma handling).
struct RGBImage {
  int width = 0;   // N
  int height = 0;  // M
  std::array<std::vector<double>, 3> planes;

  static RGBImage zero(int width, int height);
  static RGBImage constant(int width, int height,
                           const std::array<double, 3>& value);

  double& at(int channel, int row, int col) {
    return planes[channel][static_cast<size_t>(row) * width + col];
  }
  double at(int channel, int row, int col) const {
    return planes[channel][static_cast<size_t>(row) * width + col];
  }
  size_t pixel_count() const {
    return static_cast<size_t>(width) * static_cast<size_t>(height);
  }
};

/// 8-bit PNG; grayscale and RGBA inputs are expanded/flattened to RGB.
RGBImage read_png(const std::string& path);

/// Writes 8-bit RGB; values are clamped to [0,1] then scaled by 255.
void write_png(const RGBImage& image, const std::string& path);

/// Grayscale view of a PNG (mean of channels), used for kernel files.
std::vector<double> read_png_gray(const std::string& path, int& width,
                                  int& height);

}  // namespace gdiff
