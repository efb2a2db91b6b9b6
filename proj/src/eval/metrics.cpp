#include "meshmotion/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace meshmotion::eval {

double psnr(const toydata::Image& a, const toydata::Image& b, double max_value) {
  if (!a.same_shape(b)) throw std::invalid_argument("psnr: images differ in shape");
  if (!(max_value > 0.0)) throw std::invalid_argument("psnr: max_value must be positive");
  if (a.rgb.empty()) throw std::invalid_argument("psnr: empty image");
  double sq = 0.0;
  for (size_t i = 0; i < a.rgb.size(); ++i) {
    const double d = static_cast<double>(a.rgb[i]) - static_cast<double>(b.rgb[i]);
    sq += d * d;
  }
  const double mse = sq / static_cast<double>(a.rgb.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(max_value * max_value / mse));
}

double ssim(const toydata::Image& a, const toydata::Image& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("ssim: images differ in shape");
  const toydata::SsimOptions opt;
  if (a.width < opt.window || a.height < opt.window)
    throw std::invalid_argument("ssim: images must be at least 11x11");
  return toydata::structural_similarity(a, b, opt);
}

}  // namespace meshmotion::eval
