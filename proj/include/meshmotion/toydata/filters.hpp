#pragma once

#include <Eigen/Geometry>
#include <vector>

#include "meshmotion/geom/types.hpp"
#include "meshmotion/toydata/image.hpp"
#include "meshmotion/toydata/render.hpp"

namespace meshmotion::toydata {

inline constexpr double kDefaultSsimThreshold = 0.995;

struct SsimFilterResult {
  bool keep = true;
  double score = 0.0;  // mean SSIM over consecutive frame pairs
};

/// Rejects a sequence as static when its mean consecutive SSIM reaches the
/// threshold; threshold must lie in (0, 1].
SsimFilterResult ssim_motion_filter(const std::vector<Image>& frames, double threshold);

/// Multi-view form: the score is averaged over views.
SsimFilterResult ssim_motion_filter(const std::vector<MultiViewFrame>& frames, double threshold);

struct BoundsFilterResult {
  bool keep = true;
  int offending_frame = -1;
};

BoundsFilterResult bounds_filter(const std::vector<geom::Points>& frames, const Eigen::AlignedBox3d& box);

}  // namespace meshmotion::toydata
