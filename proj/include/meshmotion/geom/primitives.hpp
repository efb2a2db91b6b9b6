#pragma once

#include "meshmotion/geom/types.hpp"

namespace meshmotion::geom {

/// Axis-aligned box centered at the origin, each face split into a
/// `subdiv`×`subdiv` grid of quads (two triangles each), outward winding.
TriangleMesh make_box(const Eigen::Vector3d& half_extents, int subdiv = 1);

/// UV sphere centered at the origin with poles on ±y.
TriangleMesh make_uv_sphere(double radius, int stacks, int slices);

/// Capped cylinder along y spanning [-half_height, half_height].
TriangleMesh make_cylinder(double radius, double half_height, int rings, int slices);

TriangleMesh make_triangle(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                           const Eigen::Vector3d& c);

}  // namespace meshmotion::geom
