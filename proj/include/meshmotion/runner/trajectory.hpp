#pragma once

#include <filesystem>
#include <vector>

#include "meshmotion/geom/types.hpp"

namespace meshmotion::runner {

/// T point sets of equal size N; frame t is positions[t].
struct Trajectory {
  std::vector<geom::Points> frames;

  int frame_count() const { return static_cast<int>(frames.size()); }
  Eigen::Index point_count() const { return frames.empty() ? 0 : frames.front().rows(); }

  /// At least one frame, equal point counts, finite coordinates.
  void validate() const;
};

/// "TRJ1", uint32 T, uint32 N, then T·N·3 float32 little-endian in (t, n, xyz) order.
void save_trajectory(const std::filesystem::path& path, const Trajectory& traj);
Trajectory load_trajectory(const std::filesystem::path& path);

/// Sequential jitter suppression: a point keeps its previous refined position
/// whenever the raw prediction moved it by less than `delta`.
Trajectory refine_trajectory(const Trajectory& traj, double delta);

/// One mesh per trajectory frame, sharing the input faces.
std::vector<geom::TriangleMesh> drive_mesh(const geom::TriangleMesh& mesh, const Trajectory& traj);

/// Writes frame_%04d.obj for every frame plus trajectory.trj into `out_dir`.
/// Frame 0 uses the mesh's own vertices verbatim.
void export_animation(const std::filesystem::path& out_dir, const geom::TriangleMesh& mesh, const Trajectory& traj,
                      const geom::Points* colors = nullptr);

}  // namespace meshmotion::runner
