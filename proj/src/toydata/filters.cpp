#include "meshmotion/toydata/filters.hpp"

#include <stdexcept>

namespace meshmotion::toydata {

namespace {

void check_threshold(double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw std::invalid_argument("ssim_motion_filter: threshold must lie in (0, 1]");
}

double mean_consecutive_ssim(const std::vector<Image>& frames) {
  if (frames.size() < 2) throw std::invalid_argument("ssim_motion_filter: need at least two frames");
  for (const Image& f : frames)
    if (!f.same_shape(frames.front())) throw std::invalid_argument("ssim_motion_filter: frame shapes differ");
  double total = 0.0;
  for (size_t t = 1; t < frames.size(); ++t) total += structural_similarity(frames[t - 1], frames[t]);
  return total / static_cast<double>(frames.size() - 1);
}

}  // namespace

SsimFilterResult ssim_motion_filter(const std::vector<Image>& frames, double threshold) {
  check_threshold(threshold);
  SsimFilterResult r;
  r.score = mean_consecutive_ssim(frames);
  r.keep = r.score < threshold;
  return r;
}

SsimFilterResult ssim_motion_filter(const std::vector<MultiViewFrame>& frames, double threshold) {
  check_threshold(threshold);
  if (frames.size() < 2) throw std::invalid_argument("ssim_motion_filter: need at least two frames");
  const size_t views = frames.front().images.size();
  double total = 0.0;
  for (size_t v = 0; v < views; ++v) {
    std::vector<Image> seq;
    for (const MultiViewFrame& f : frames) {
      if (f.images.size() != views) throw std::invalid_argument("ssim_motion_filter: view count varies");
      seq.push_back(f.images[v]);
    }
    total += mean_consecutive_ssim(seq);
  }
  SsimFilterResult r;
  r.score = total / static_cast<double>(views);
  r.keep = r.score < threshold;
  return r;
}

BoundsFilterResult bounds_filter(const std::vector<geom::Points>& frames, const Eigen::AlignedBox3d& box) {
  if (frames.empty()) throw std::invalid_argument("bounds_filter: no frames");
  for (size_t t = 0; t < frames.size(); ++t) {
    const geom::Points& f = frames[t];
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
      if (!box.contains(f.row(i).transpose())) return {false, static_cast<int>(t)};
    }
  }
  return {};
}

}  // namespace meshmotion::toydata
