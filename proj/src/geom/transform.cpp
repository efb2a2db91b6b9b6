#include "meshmotion/geom/transform.hpp"

#include <stdexcept>

namespace meshmotion::geom {

Points SimilarityTransform::apply(const Points& p) const {
  Points out = p * scale;
  out.rowwise() += offset.transpose();
  return out;
}

Points SimilarityTransform::invert(const Points& p) const {
  Points out = p;
  out.rowwise() -= offset.transpose();
  return out / scale;
}

SimilarityTransform unit_cube_transform(const Points& vertices) {
  if (vertices.rows() == 0) throw std::invalid_argument("normalize: mesh has no vertices");
  const Eigen::RowVector3d lo = vertices.colwise().minCoeff();
  const Eigen::RowVector3d hi = vertices.colwise().maxCoeff();
  const double extent = (hi - lo).maxCoeff();
  if (!(extent > 0.0)) throw std::invalid_argument("normalize: all vertices coincide");
  SimilarityTransform t;
  t.scale = 1.8 / extent;
  t.offset = (-0.5 * (lo + hi) * t.scale).transpose();
  return t;
}

NormalizedMesh normalize_to_unit_cube(const TriangleMesh& mesh) {
  NormalizedMesh out;
  out.transform = unit_cube_transform(mesh.vertices);
  out.mesh.faces = mesh.faces;
  out.mesh.vertices = out.transform.apply(mesh.vertices);
  return out;
}

}  // namespace meshmotion::geom
