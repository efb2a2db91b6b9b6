#pragma once

#include <Eigen/Core>

#include "meshmotion/geom/types.hpp"

namespace meshmotion::geom {

/// out = in·scale + offset
struct SimilarityTransform {
  double scale = 1.0;
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();

  Points apply(const Points& p) const;
  Points invert(const Points& p) const;
};

struct NormalizedMesh {
  TriangleMesh mesh;
  SimilarityTransform transform;
};

/// Centers the bounding box at the origin and scales the longest axis to span [-0.9, 0.9].
SimilarityTransform unit_cube_transform(const Points& vertices);
NormalizedMesh normalize_to_unit_cube(const TriangleMesh& mesh);

}  // namespace meshmotion::geom
