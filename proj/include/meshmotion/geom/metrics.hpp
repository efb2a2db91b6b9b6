#pragma once

#include "meshmotion/geom/types.hpp"

namespace meshmotion::geom {

/// ½·(mean_a min_b ‖a−b‖ + mean_b min_a ‖a−b‖), unsquared Euclidean distances.
double chamfer_distance(const Points& a, const Points& b);

inline double chamfer_distance(const PointCloud& a, const PointCloud& b) {
  return chamfer_distance(a.points, b.points);
}

}  // namespace meshmotion::geom
