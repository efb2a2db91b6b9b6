#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cstdint>
#include <vector>

namespace meshmotion::geom {

/// N×3 row-major coordinate block. Rows are points.
using Points = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Faces = Eigen::Matrix<int32_t, Eigen::Dynamic, 3, Eigen::RowMajor>;

struct PointCloud {
  Points points;

  PointCloud() = default;
  explicit PointCloud(Points p) : points(std::move(p)) {}

  Eigen::Index size() const { return points.rows(); }

  /// Throws std::invalid_argument when empty or non-finite.
  void validate() const;
};

struct TriangleMesh {
  Points vertices;
  Faces faces;

  Eigen::Index vertex_count() const { return vertices.rows(); }
  Eigen::Index face_count() const { return faces.rows(); }

  /// Face indices in range, no repeated index within a face, finite vertices.
  void validate() const;

  double face_area(Eigen::Index f) const;
  double surface_area() const;
};

enum class Projection { Orthographic, Pinhole };

/// Camera looking along `forward` (third row of `orientation`). Image rows grow
/// downward, so pixel v maps against `up`.
struct Camera {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Matrix3d orientation = Eigen::Matrix3d::Identity();  // rows: right, up, forward
  Projection projection = Projection::Orthographic;
  double half_extent = 1.0;  // orthographic: half-height of the view volume in scene units
  double focal_px = 64.0;    // pinhole: focal length in pixels
  int width = 64;
  int height = 64;

  Eigen::Vector3d right() const { return orientation.row(0).transpose(); }
  Eigen::Vector3d up() const { return orientation.row(1).transpose(); }
  Eigen::Vector3d forward() const { return orientation.row(2).transpose(); }

  void validate() const;

  /// Camera at `center` looking at `target`, with `world_up` used to fix roll.
  static Camera look_at(const Eigen::Vector3d& center, const Eigen::Vector3d& target,
                        const Eigen::Vector3d& world_up, Projection projection, int width,
                        int height);
};

/// Per-pixel Plücker line coordinates, pixel index = v * width + u.
struct RaySheet {
  int width = 0;
  int height = 0;
  Points direction;
  Points moment;
};

}  // namespace meshmotion::geom
