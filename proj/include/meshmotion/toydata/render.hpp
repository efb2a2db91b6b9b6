#pragma once

#include <vector>

#include "meshmotion/geom/types.hpp"
#include "meshmotion/toydata/image.hpp"

namespace meshmotion::toydata {

struct MultiViewFrame {
  std::vector<Image> images;
  std::vector<geom::Camera> cameras;
  double timestamp = 0.0;

  void validate() const;
};

inline constexpr double kDefaultCameraDistance = 3.0;
inline constexpr double kDefaultHalfExtent = 1.1;

/// Four orthographic cameras on the horizontal circle (front, right, back, left),
/// all looking at the origin.
std::vector<geom::Camera> default_cameras(int width = 64, int height = 64);

/// Cameras serialized as `view<i>.<field> = ...` entries.
void write_cameras(const std::filesystem::path& path, const std::vector<geom::Camera>& cameras);
std::vector<geom::Camera> read_cameras(const std::filesystem::path& path);

/// Z-buffered flat-shaded rasterization over a white background. Face color is
/// the mean of its vertex colors scaled by (0.3 + 0.7·|n·l|) for a fixed world
/// light direction; both windings are drawn.
Image rasterize(const geom::Points& vertices, const geom::Faces& faces, const geom::Points& colors,
                const geom::Camera& camera);

MultiViewFrame render_views(const geom::Points& vertices, const geom::Faces& faces,
                            const geom::Points& colors, const std::vector<geom::Camera>& cameras,
                            double timestamp);

}  // namespace meshmotion::toydata
