#include "meshmotion/geom/embedding.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace meshmotion::geom {

Eigen::MatrixXd fourier_features(const Points& points, int octaves) {
  if (octaves < 1) throw std::invalid_argument("fourier_features: octaves must be positive");
  Eigen::MatrixXd out(points.rows(), 6 * octaves);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (int axis = 0; axis < 3; ++axis) {
      for (int k = 0; k < octaves; ++k) {
        const double freq = std::numbers::pi * std::ldexp(1.0, k - 1);
        const double x = freq * points(i, axis);
        const Eigen::Index col = (axis * octaves + k) * 2;
        out(i, col) = std::sin(x);
        out(i, col + 1) = std::cos(x);
      }
    }
  }
  return out;
}

Eigen::MatrixXd positional_embed(const Points& points, const Eigen::MatrixXd& projection,
                                 const Eigen::VectorXd& bias) {
  if (projection.rows() % 6 != 0)
    throw std::invalid_argument("positional_embed: feature count must be divisible by 6");
  if (bias.size() != projection.cols())
    throw std::invalid_argument("positional_embed: bias size does not match output channels");
  const int octaves = static_cast<int>(projection.rows() / 6);
  Eigen::MatrixXd out = fourier_features(points, octaves) * projection;
  out.rowwise() += bias.transpose();
  return out;
}

RaySheet plucker_embed(const Camera& camera) {
  camera.validate();
  RaySheet sheet;
  sheet.width = camera.width;
  sheet.height = camera.height;
  const Eigen::Index count = static_cast<Eigen::Index>(camera.width) * camera.height;
  sheet.direction.resize(count, 3);
  sheet.moment.resize(count, 3);

  const Eigen::Vector3d right = camera.right();
  const Eigen::Vector3d up = camera.up();
  const Eigen::Vector3d fwd = camera.forward();
  const double aspect = static_cast<double>(camera.width) / camera.height;

  for (int v = 0; v < camera.height; ++v) {
    for (int u = 0; u < camera.width; ++u) {
      // Normalized device coordinates of the pixel center, y up.
      const double nx = ((u + 0.5) / camera.width) * 2.0 - 1.0;
      const double ny = 1.0 - ((v + 0.5) / camera.height) * 2.0;
      Eigen::Vector3d origin;
      Eigen::Vector3d dir;
      if (camera.projection == Projection::Orthographic) {
        origin = camera.center + right * (nx * camera.half_extent * aspect) +
                 up * (ny * camera.half_extent);
        dir = fwd;
      } else {
        origin = camera.center;
        const double px = (u + 0.5) - camera.width * 0.5;
        const double py = camera.height * 0.5 - (v + 0.5);
        dir = (right * px + up * py + fwd * camera.focal_px).normalized();
      }
      const Eigen::Index idx = static_cast<Eigen::Index>(v) * camera.width + u;
      sheet.direction.row(idx) = dir.transpose();
      sheet.moment.row(idx) = origin.cross(dir).transpose();
    }
  }
  return sheet;
}

}  // namespace meshmotion::geom
