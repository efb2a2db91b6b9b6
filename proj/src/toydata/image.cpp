#include "meshmotion/toydata/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

#include "meshmotion/errors.hpp"

namespace meshmotion::toydata {

namespace {

std::vector<double> gaussian_taps(int size, double sigma) {
  std::vector<double> taps(static_cast<size_t>(size));
  const double c = (size - 1) / 2.0;
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    taps[static_cast<size_t>(i)] = std::exp(-((i - c) * (i - c)) / (2.0 * sigma * sigma));
    total += taps[static_cast<size_t>(i)];
  }
  for (double& t : taps) t /= total;
  return taps;
}

// Valid-mode separable filtering of a single-channel plane.
std::vector<double> filter_valid(const std::vector<double>& plane, int w, int h,
                                 const std::vector<double>& taps) {
  const int k = static_cast<int>(taps.size());
  const int ow = w - k + 1, oh = h - k + 1;
  std::vector<double> tmp(static_cast<size_t>(ow) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) s += taps[static_cast<size_t>(i)] * plane[static_cast<size_t>(y) * w + x + i];
      tmp[static_cast<size_t>(y) * ow + x] = s;
    }
  std::vector<double> out(static_cast<size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) s += taps[static_cast<size_t>(i)] * tmp[static_cast<size_t>(y + i) * ow + x];
      out[static_cast<size_t>(y) * ow + x] = s;
    }
  return out;
}

}  // namespace

double structural_similarity(const Image& a, const Image& b, const SsimOptions& opt) {
  if (!a.same_shape(b)) throw std::invalid_argument("ssim: image shapes differ");
  if (a.width < opt.window || a.height < opt.window)
    throw std::invalid_argument("ssim: image smaller than the SSIM window");
  const double c1 = (opt.k1 * opt.dynamic_range) * (opt.k1 * opt.dynamic_range);
  const double c2 = (opt.k2 * opt.dynamic_range) * (opt.k2 * opt.dynamic_range);
  const auto taps = gaussian_taps(opt.window, opt.sigma);
  const int w = a.width, h = a.height;
  const size_t n = static_cast<size_t>(w) * h;

  double total = 0.0;
  size_t count = 0;
  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  for (int c = 0; c < 3; ++c) {
    for (size_t i = 0; i < n; ++i) {
      x[i] = a.rgb[i * 3 + static_cast<size_t>(c)];
      y[i] = b.rgb[i * 3 + static_cast<size_t>(c)];
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, w, h, taps), my = filter_valid(y, w, h, taps);
    const auto exx = filter_valid(xx, w, h, taps), eyy = filter_valid(yy, w, h, taps);
    const auto exy = filter_valid(xy, w, h, taps);
    for (size_t i = 0; i < mx.size(); ++i) {
      const double sx = exx[i] - mx[i] * mx[i];
      const double sy = eyy[i] - my[i] * my[i];
      const double sxy = exy[i] - mx[i] * my[i];
      const double num = (2.0 * mx[i] * my[i] + c1) * (2.0 * sxy + c2);
      const double den = (mx[i] * mx[i] + my[i] * my[i] + c1) * (sx + sy + c2);
      total += num / den;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

Image quantize8(const Image& image) {
  Image out = image;
  for (float& v : out.rgb) v = static_cast<float>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)) / 255.0f;
  return out;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
  if (!fp) throw IoError("cannot open for writing: " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng initialization failed");
  }
  std::vector<png_byte> row(static_cast<size_t>(image.width) * 3);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encode failed: " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int v = 0; v < image.height; ++v) {
    for (int i = 0; i < image.width * 3; ++i) {
      const float x = image.rgb[static_cast<size_t>(v) * image.width * 3 + static_cast<size_t>(i)];
      row[static_cast<size_t>(i)] = static_cast<png_byte>(std::lround(std::clamp(x, 0.0f, 1.0f) * 255.0f));
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image read_png(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(std::fopen(path.string().c_str(), "rb"), &std::fclose);
  if (!fp) throw IoError("cannot open PNG: " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw IoError("not a PNG file: " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng initialization failed");
  }
  Image img;
  std::vector<png_byte> row;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("PNG decode failed: " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  const auto depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.rgb.resize(static_cast<size_t>(img.width) * img.height * 3);
  row.resize(png_get_rowbytes(png, info));
  for (int v = 0; v < img.height; ++v) {
    png_read_row(png, row.data(), nullptr);
    for (int i = 0; i < img.width * 3; ++i)
      img.rgb[static_cast<size_t>(v) * img.width * 3 + static_cast<size_t>(i)] = row[static_cast<size_t>(i)] / 255.0f;
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

}  // namespace meshmotion::toydata
