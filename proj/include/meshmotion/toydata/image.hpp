#pragma once

#include <filesystem>
#include <vector>

namespace meshmotion::toydata {

/// Interleaved RGB image, row-major, values in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> rgb;

  Image() = default;
  Image(int w, int h, float fill = 0.0f)
      : width(w), height(h), rgb(static_cast<size_t>(w) * h * 3, fill) {}

  float& at(int v, int u, int c) { return rgb[(static_cast<size_t>(v) * width + u) * 3 + c]; }
  float at(int v, int u, int c) const { return rgb[(static_cast<size_t>(v) * width + u) * 3 + c]; }

  bool same_shape(const Image& other) const { return width == other.width && height == other.height; }
  bool operator==(const Image& other) const = default;
};

struct SsimOptions {
  double k1 = 0.01;
  double k2 = 0.03;
  int window = 11;
  double sigma = 1.5;
  double dynamic_range = 1.0;
};

/// Mean local SSIM over all valid window positions and the three channels.
/// Images must share a shape at least `window` pixels on each side.
double structural_similarity(const Image& a, const Image& b, const SsimOptions& options = {});

/// 8-bit RGB PNG.
void write_png(const std::filesystem::path& path, const Image& image);
Image read_png(const std::filesystem::path& path);

/// Rounds every channel to the nearest 8-bit level, as a PNG round trip would.
Image quantize8(const Image& image);

}  // namespace meshmotion::toydata
