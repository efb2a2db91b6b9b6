#include "meshmotion/geom/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace meshmotion::geom {

std::vector<int> farthest_point_sample(const Points& points, int count, int seed_index) {
  const auto n = static_cast<int>(points.rows());
  if (n == 0) throw std::invalid_argument("farthest_point_sample: empty cloud");
  if (count < 1 || count > n)
    throw std::invalid_argument("farthest_point_sample: count must be in [1, N]");
  if (seed_index < 0 || seed_index >= n)
    throw std::invalid_argument("farthest_point_sample: seed index out of range");

  std::vector<int> picked;
  picked.reserve(static_cast<size_t>(count));
  std::vector<double> min_d2(static_cast<size_t>(n), std::numeric_limits<double>::infinity());
  int current = seed_index;
  for (int k = 0; k < count; ++k) {
    picked.push_back(current);
    min_d2[static_cast<size_t>(current)] = -1.0;  // never re-picked
    const Eigen::RowVector3d c = points.row(current);
    int best = -1;
    double best_d2 = -1.0;
    for (int i = 0; i < n; ++i) {
      double& d = min_d2[static_cast<size_t>(i)];
      if (d < 0.0) continue;
      d = std::min(d, (points.row(i) - c).squaredNorm());
      if (d > best_d2) {  // strict: lowest index keeps ties
        best_d2 = d;
        best = i;
      }
    }
    current = best;
  }
  return picked;
}

namespace {

SurfaceSample random_on_face(int face, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double r1 = std::sqrt(uni(rng));
  const double r2 = uni(rng);
  SurfaceSample s;
  s.face = face;
  s.u = 1.0 - r1;
  s.v = r1 * (1.0 - r2);
  s.w = r1 * r2;
  return s;
}

std::vector<SurfaceSample> uniform_samples(const TriangleMesh& mesh, int count,
                                           std::mt19937_64& rng) {
  std::vector<double> cumulative(static_cast<size_t>(mesh.face_count()));
  double total = 0.0;
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
    total += mesh.face_area(f);
    cumulative[static_cast<size_t>(f)] = total;
  }
  if (!(total > 0.0)) throw std::invalid_argument("sample_surface: mesh has zero surface area");

  std::uniform_real_distribution<double> uni(0.0, total);
  std::vector<SurfaceSample> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double r = uni(rng);
    // upper_bound never lands on a zero-area face; r == total can only occur through rounding.
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
    if (it == cumulative.end()) it = std::lower_bound(cumulative.begin(), cumulative.end(), total);
    const auto face = static_cast<int>(it - cumulative.begin());
    out.push_back(random_on_face(face, rng));
  }
  return out;
}

}  // namespace

std::vector<SurfaceSample> sample_surface_barycentric(const TriangleMesh& mesh, int n_random,
                                                      int n_fps, std::mt19937_64& rng) {
  mesh.validate();
  if (mesh.face_count() == 0) throw std::invalid_argument("sample_surface: mesh has no faces");
  if (n_random < 0 || n_fps < 0 || n_random + n_fps < 1)
    throw std::invalid_argument("sample_surface: need at least one sample");

  std::vector<SurfaceSample> out = uniform_samples(mesh, n_random, rng);
  if (n_fps > 0) {
    const int pool_size = 8 * (n_random + n_fps);
    std::vector<SurfaceSample> pool = uniform_samples(mesh, pool_size, rng);
    const Points pool_points = evaluate_samples(mesh, mesh.vertices, pool);
    for (int idx : farthest_point_sample(pool_points, n_fps, 0)) out.push_back(pool[static_cast<size_t>(idx)]);
  }
  return out;
}

Points evaluate_samples(const TriangleMesh& mesh, const Points& vertices,
                        const std::vector<SurfaceSample>& samples) {
  if (vertices.rows() != mesh.vertex_count())
    throw std::invalid_argument("evaluate_samples: vertex count does not match mesh");
  Points out(static_cast<Eigen::Index>(samples.size()), 3);
  for (size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    out.row(static_cast<Eigen::Index>(i)) = s.u * vertices.row(mesh.faces(s.face, 0)) +
                                            s.v * vertices.row(mesh.faces(s.face, 1)) +
                                            s.w * vertices.row(mesh.faces(s.face, 2));
  }
  return out;
}

PointCloud sample_surface(const TriangleMesh& mesh, int n_random, int n_fps, std::mt19937_64& rng) {
  const auto samples = sample_surface_barycentric(mesh, n_random, n_fps, rng);
  return PointCloud(evaluate_samples(mesh, mesh.vertices, samples));
}

}  // namespace meshmotion::geom
