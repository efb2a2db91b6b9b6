#include "meshmotion/runner/trajectory.hpp"

#include <cstdio>
#include <stdexcept>
#include <string>

#include "meshmotion/binary_io.hpp"
#include "meshmotion/geom/io.hpp"

namespace meshmotion::runner {

void Trajectory::validate() const {
  if (frames.empty()) throw std::invalid_argument("trajectory: no frames");
  const Eigen::Index n = frames.front().rows();
  for (const auto& f : frames) {
    if (f.rows() != n) throw std::invalid_argument("trajectory: frames differ in point count");
    if (!f.allFinite()) throw std::invalid_argument("trajectory: non-finite coordinate");
  }
}

void save_trajectory(const std::filesystem::path& path, const Trajectory& traj) {
  traj.validate();
  binary::Writer w(path);
  w.magic("TRJ1");
  w.scalar<uint32_t>(static_cast<uint32_t>(traj.frame_count()));
  w.scalar<uint32_t>(static_cast<uint32_t>(traj.point_count()));
  std::vector<float> buf(static_cast<size_t>(traj.point_count()) * 3);
  for (const auto& f : traj.frames) {
    for (Eigen::Index i = 0; i < f.rows(); ++i)
      for (int k = 0; k < 3; ++k) buf[static_cast<size_t>(i * 3 + k)] = static_cast<float>(f(i, k));
    w.floats(buf);
  }
  w.finish();
}

Trajectory load_trajectory(const std::filesystem::path& path) {
  binary::Reader r(path);
  r.expect_magic("TRJ1");
  const auto t = r.scalar<uint32_t>();
  const auto n = r.scalar<uint32_t>();
  if (t == 0) throw IoError(path.string() + ": trajectory has no frames");
  if (static_cast<uint64_t>(t) * n > (1ull << 31)) throw IoError(path.string() + ": trajectory size out of range");
  Trajectory traj;
  std::vector<float> buf(static_cast<size_t>(n) * 3);
  for (uint32_t f = 0; f < t; ++f) {
    r.floats(buf);
    geom::Points p(static_cast<Eigen::Index>(n), 3);
    for (Eigen::Index i = 0; i < p.rows(); ++i)
      for (int k = 0; k < 3; ++k) p(i, k) = buf[static_cast<size_t>(i * 3 + k)];
    traj.frames.push_back(std::move(p));
  }
  if (!r.at_end()) throw IoError(path.string() + ": trailing bytes after trajectory data");
  return traj;
}

Trajectory refine_trajectory(const Trajectory& traj, double delta) {
  if (!(delta >= 0.0)) throw std::invalid_argument("refine_trajectory: delta must be non-negative");
  traj.validate();
  Trajectory out = traj;
  for (int t = 1; t < out.frame_count(); ++t) {
    const geom::Points& prev = out.frames[static_cast<size_t>(t - 1)];
    geom::Points& cur = out.frames[static_cast<size_t>(t)];
    for (Eigen::Index i = 0; i < cur.rows(); ++i)
      if ((cur.row(i) - prev.row(i)).norm() < delta) cur.row(i) = prev.row(i);
  }
  return out;
}

std::vector<geom::TriangleMesh> drive_mesh(const geom::TriangleMesh& mesh, const Trajectory& traj) {
  traj.validate();
  if (traj.point_count() != mesh.vertex_count())
    throw std::invalid_argument("drive_mesh: trajectory has " + std::to_string(traj.point_count()) +
                                " points but the mesh has " + std::to_string(mesh.vertex_count()) + " vertices");
  std::vector<geom::TriangleMesh> out;
  out.reserve(traj.frames.size());
  for (size_t t = 0; t < traj.frames.size(); ++t) {
    geom::TriangleMesh m;
    m.faces = mesh.faces;
    m.vertices = t == 0 ? mesh.vertices : traj.frames[t];
    out.push_back(std::move(m));
  }
  return out;
}

void export_animation(const std::filesystem::path& out_dir, const geom::TriangleMesh& mesh, const Trajectory& traj,
                      const geom::Points* colors) {
  const auto meshes = drive_mesh(mesh, traj);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  for (size_t t = 0; t < meshes.size(); ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%04zu.obj", t);
    geom::write_obj(out_dir / name, meshes[t], colors);
  }
  save_trajectory(out_dir / "trajectory.trj", traj);
}

}  // namespace meshmotion::runner
