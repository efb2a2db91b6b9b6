#pragma once

#include <filesystem>
#include <optional>

#include "meshmotion/geom/types.hpp"

namespace meshmotion::geom {

/// ASCII OBJ: `v x y z [r g b]` and `f` records; polygons are fan-triangulated,
/// `a/b/c` tokens and negative indices are accepted. Other records are ignored.
struct ObjData {
  TriangleMesh mesh;
  std::optional<Points> colors;  // present only when every vertex carries rgb
};

ObjData read_obj(const std::filesystem::path& path);
void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh,
               const Points* colors = nullptr);

/// "PCT1" point file: magic, uint32 N, N×3 float32, little-endian.
void write_point_file(const std::filesystem::path& path, const Points& points);
Points read_point_file(const std::filesystem::path& path);

}  // namespace meshmotion::geom
