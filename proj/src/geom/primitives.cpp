#include "meshmotion/geom/primitives.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace meshmotion::geom {

namespace {

struct Builder {
  std::vector<Eigen::RowVector3d> verts;
  std::vector<Eigen::Matrix<int32_t, 1, 3>> faces;

  int add(const Eigen::RowVector3d& p) {
    verts.push_back(p);
    return static_cast<int>(verts.size()) - 1;
  }
  void tri(int a, int b, int c) { faces.push_back({a, b, c}); }

  TriangleMesh build() const {
    TriangleMesh m;
    m.vertices.resize(static_cast<Eigen::Index>(verts.size()), 3);
    for (size_t i = 0; i < verts.size(); ++i) m.vertices.row(static_cast<Eigen::Index>(i)) = verts[i];
    m.faces.resize(static_cast<Eigen::Index>(faces.size()), 3);
    for (size_t i = 0; i < faces.size(); ++i) m.faces.row(static_cast<Eigen::Index>(i)) = faces[i];
    return m;
  }
};

}  // namespace

TriangleMesh make_box(const Eigen::Vector3d& half_extents, int subdiv) {
  if (subdiv < 1) throw std::invalid_argument("make_box: subdiv must be positive");
  Builder b;
  // Each face: normal axis n, sign s, tangent axes (a0, a1) chosen so a0 × a1 = s·e_n.
  for (int n = 0; n < 3; ++n) {
    for (int s : {1, -1}) {
      int a0 = (n + 1) % 3, a1 = (n + 2) % 3;
      if (s < 0) std::swap(a0, a1);
      std::vector<int> grid;
      for (int i = 0; i <= subdiv; ++i) {
        for (int j = 0; j <= subdiv; ++j) {
          Eigen::RowVector3d p;
          p[n] = s * half_extents[n];
          p[a0] = (-1.0 + 2.0 * i / subdiv) * half_extents[a0];
          p[a1] = (-1.0 + 2.0 * j / subdiv) * half_extents[a1];
          grid.push_back(b.add(p));
        }
      }
      auto at = [&](int i, int j) { return grid[static_cast<size_t>(i * (subdiv + 1) + j)]; };
      for (int i = 0; i < subdiv; ++i) {
        for (int j = 0; j < subdiv; ++j) {
          b.tri(at(i, j), at(i + 1, j), at(i + 1, j + 1));
          b.tri(at(i, j), at(i + 1, j + 1), at(i, j + 1));
        }
      }
    }
  }
  return b.build();
}

TriangleMesh make_uv_sphere(double radius, int stacks, int slices) {
  if (stacks < 2 || slices < 3) throw std::invalid_argument("make_uv_sphere: too few stacks/slices");
  Builder b;
  const int top = b.add({0.0, radius, 0.0});
  for (int i = 1; i < stacks; ++i) {
    const double phi = std::numbers::pi * i / stacks;
    for (int j = 0; j < slices; ++j) {
      const double theta = 2.0 * std::numbers::pi * j / slices;
      b.add({radius * std::sin(phi) * std::cos(theta), radius * std::cos(phi),
             radius * std::sin(phi) * std::sin(theta)});
    }
  }
  const int bottom = b.add({0.0, -radius, 0.0});
  auto ring = [&](int i, int j) { return 1 + (i - 1) * slices + ((j % slices) + slices) % slices; };
  for (int j = 0; j < slices; ++j) b.tri(top, ring(1, j + 1), ring(1, j));
  for (int i = 1; i + 1 < stacks; ++i) {
    for (int j = 0; j < slices; ++j) {
      b.tri(ring(i, j), ring(i, j + 1), ring(i + 1, j + 1));
      b.tri(ring(i, j), ring(i + 1, j + 1), ring(i + 1, j));
    }
  }
  for (int j = 0; j < slices; ++j) b.tri(bottom, ring(stacks - 1, j), ring(stacks - 1, j + 1));
  return b.build();
}

TriangleMesh make_cylinder(double radius, double half_height, int rings, int slices) {
  if (rings < 1 || slices < 3) throw std::invalid_argument("make_cylinder: too few rings/slices");
  Builder b;
  for (int i = 0; i <= rings; ++i) {
    const double y = -half_height + 2.0 * half_height * i / rings;
    for (int j = 0; j < slices; ++j) {
      const double theta = 2.0 * std::numbers::pi * j / slices;
      b.add({radius * std::cos(theta), y, radius * std::sin(theta)});
    }
  }
  auto at = [&](int i, int j) { return i * slices + (j % slices); };
  for (int i = 0; i < rings; ++i) {
    for (int j = 0; j < slices; ++j) {
      b.tri(at(i, j), at(i + 1, j), at(i + 1, j + 1));
      b.tri(at(i, j), at(i + 1, j + 1), at(i, j + 1));
    }
  }
  const int bottom = b.add({0.0, -half_height, 0.0});
  const int top = b.add({0.0, half_height, 0.0});
  for (int j = 0; j < slices; ++j) {
    b.tri(bottom, at(0, j), at(0, j + 1));
    b.tri(top, at(rings, j + 1), at(rings, j));
  }
  return b.build();
}

TriangleMesh make_triangle(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                           const Eigen::Vector3d& c) {
  TriangleMesh m;
  m.vertices.resize(3, 3);
  m.vertices.row(0) = a.transpose();
  m.vertices.row(1) = b.transpose();
  m.vertices.row(2) = c.transpose();
  m.faces.resize(1, 3);
  m.faces << 0, 1, 2;
  return m;
}

}  // namespace meshmotion::geom
