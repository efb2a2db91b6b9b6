#include "meshmotion/geom/types.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <stdexcept>
#include <string>

namespace meshmotion::geom {

void PointCloud::validate() const {
  if (points.rows() == 0) throw std::invalid_argument("point cloud is empty");
  if (!points.allFinite()) throw std::invalid_argument("point cloud has non-finite coordinates");
}

void TriangleMesh::validate() const {
  if (vertices.rows() == 0) throw std::invalid_argument("mesh has no vertices");
  if (!vertices.allFinite()) throw std::invalid_argument("mesh has non-finite vertices");
  const auto nv = static_cast<int32_t>(vertices.rows());
  for (Eigen::Index f = 0; f < faces.rows(); ++f) {
    const int32_t a = faces(f, 0), b = faces(f, 1), c = faces(f, 2);
    if (a < 0 || b < 0 || c < 0 || a >= nv || b >= nv || c >= nv)
      throw std::invalid_argument("face " + std::to_string(f) + " has an out-of-range index");
    if (a == b || b == c || a == c)
      throw std::invalid_argument("face " + std::to_string(f) + " repeats a vertex index");
  }
}

double TriangleMesh::face_area(Eigen::Index f) const {
  const Eigen::Vector3d a = vertices.row(faces(f, 0));
  const Eigen::Vector3d b = vertices.row(faces(f, 1));
  const Eigen::Vector3d c = vertices.row(faces(f, 2));
  return 0.5 * (b - a).cross(c - a).norm();
}

double TriangleMesh::surface_area() const {
  double total = 0.0;
  for (Eigen::Index f = 0; f < faces.rows(); ++f) total += face_area(f);
  return total;
}

void Camera::validate() const {
  if (width < 8 || height < 8) throw std::invalid_argument("camera image must be at least 8x8");
  const double err = (orientation.transpose() * orientation - Eigen::Matrix3d::Identity()).norm();
  if (!(err < 1e-6)) throw std::invalid_argument("camera orientation is not orthonormal");
  if (!center.allFinite()) throw std::invalid_argument("camera center is not finite");
  if (projection == Projection::Orthographic && !(half_extent > 0.0))
    throw std::invalid_argument("orthographic half extent must be positive");
  if (projection == Projection::Pinhole && !(focal_px > 0.0))
    throw std::invalid_argument("pinhole focal length must be positive");
}

Camera Camera::look_at(const Eigen::Vector3d& center, const Eigen::Vector3d& target,
                       const Eigen::Vector3d& world_up, Projection projection, int width,
                       int height) {
  Camera cam;
  cam.center = center;
  const Eigen::Vector3d fwd = (target - center).normalized();
  Eigen::Vector3d right = fwd.cross(world_up);
  if (right.norm() < 1e-12) throw std::invalid_argument("look_at: up vector parallel to view direction");
  right.normalize();
  const Eigen::Vector3d up = right.cross(fwd);
  cam.orientation.row(0) = right.transpose();
  cam.orientation.row(1) = up.transpose();
  cam.orientation.row(2) = fwd.transpose();
  cam.projection = projection;
  cam.width = width;
  cam.height = height;
  return cam;
}

}  // namespace meshmotion::geom
