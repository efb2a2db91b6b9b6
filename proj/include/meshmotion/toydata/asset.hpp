#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "meshmotion/geom/types.hpp"

namespace meshmotion::toydata {

enum class AssetKind { Bend, Twist, Bounce, Orbit, Stretch };

inline constexpr AssetKind kAllKinds[] = {AssetKind::Bend, AssetKind::Twist, AssetKind::Bounce,
                                          AssetKind::Orbit, AssetKind::Stretch};

std::string_view kind_name(AssetKind kind);
AssetKind parse_kind(std::string_view name);  // throws std::invalid_argument

struct AssetParams {
  // Kind-specific motion magnitude: bend/twist/orbit take radians, bounce a
  // height in scene units, stretch the fractional vertical compression.
  double amplitude = 0.0;
  double max_step = 0.25;  // bound on any vertex's per-frame displacement
  int resolution = 16;     // angular slices; other tessellation follows from it

  static AssetParams defaults(AssetKind kind);
};

/// Rest geometry is already centered with longest extent 1.8, so the
/// unit-cube normalization of the rest mesh is the identity.
struct AnimatedAsset {
  AssetKind kind = AssetKind::Bend;
  uint64_t seed = 0;
  AssetParams params;
  geom::TriangleMesh rest_mesh;
  std::vector<geom::Points> frames;  // T entries, V×3 each
  geom::Points colors;               // V×3 in [0, 1]

  int frame_count() const { return static_cast<int>(frames.size()); }
  void validate() const;
};

/// Smooth ease-in/out progress in [0, 1] for frame t of T.
double motion_progress(int t, int frame_count);

/// Bends a column spanning y ∈ [base_y, base_y + length] along a circular
/// arc in the x-y plane so that its axis turns by `angle`.
geom::Points bend_map(const geom::Points& rest, double angle, double base_y, double length);

AnimatedAsset synthesize_asset(AssetKind kind, const AssetParams& params, int frame_count, uint64_t seed);

double max_frame_step(const std::vector<geom::Points>& frames);

}  // namespace meshmotion::toydata
