#pragma once

#include "meshmotion/toydata/image.hpp"

namespace meshmotion::eval {

inline constexpr double kPsnrCap = 99.0;

/// 10·log10(max² / MSE) over all pixels and channels; identical images give kPsnrCap.
double psnr(const toydata::Image& a, const toydata::Image& b, double max_value = 1.0);

/// Mean local SSIM with the dataset filter's constants; images must be at least 11×11.
double ssim(const toydata::Image& a, const toydata::Image& b);

}  // namespace meshmotion::eval
