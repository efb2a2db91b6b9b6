#pragma once

#include <random>
#include <vector>

#include "meshmotion/geom/types.hpp"

namespace meshmotion::geom {

/// Greedy max-min subsampling. Each successive pick maximizes the minimum
/// squared distance to the picked set; ties go to the lowest index.
std::vector<int> farthest_point_sample(const Points& points, int count, int seed_index = 0);

inline std::vector<int> farthest_point_sample(const PointCloud& pc, int count, int seed_index = 0) {
  return farthest_point_sample(pc.points, count, seed_index);
}

/// A point on a mesh surface in face-barycentric form, so it can be carried
/// through any per-vertex deformation of the same topology.
struct SurfaceSample {
  int face = 0;
  double u = 0.0;
  double v = 0.0;
  double w = 0.0;
};

/// `n_random` area-weighted uniform samples followed by `n_fps` samples picked
/// by farthest-point sampling from a pool of 8×(n_random + n_fps) uniform ones.
std::vector<SurfaceSample> sample_surface_barycentric(const TriangleMesh& mesh, int n_random,
                                                      int n_fps, std::mt19937_64& rng);

/// Evaluates samples on `vertices` (which must share the sampled mesh's topology).
Points evaluate_samples(const TriangleMesh& mesh, const Points& vertices,
                        const std::vector<SurfaceSample>& samples);

PointCloud sample_surface(const TriangleMesh& mesh, int n_random, int n_fps, std::mt19937_64& rng);

}  // namespace meshmotion::geom
