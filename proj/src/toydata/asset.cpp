#include "meshmotion/toydata/asset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "meshmotion/geom/primitives.hpp"

namespace meshmotion::toydata {

using geom::Points;
using geom::TriangleMesh;

std::string_view kind_name(AssetKind kind) {
  switch (kind) {
    case AssetKind::Bend: return "bend";
    case AssetKind::Twist: return "twist";
    case AssetKind::Bounce: return "bounce";
    case AssetKind::Orbit: return "orbit";
    case AssetKind::Stretch: return "stretch";
  }
  throw std::invalid_argument("unknown asset kind");
}

AssetKind parse_kind(std::string_view name) {
  for (AssetKind k : kAllKinds)
    if (kind_name(k) == name) return k;
  throw std::invalid_argument("unknown asset kind '" + std::string(name) + "'");
}

AssetParams AssetParams::defaults(AssetKind kind) {
  AssetParams p;
  switch (kind) {
    case AssetKind::Bend: p.amplitude = std::numbers::pi / 4; break;
    case AssetKind::Twist: p.amplitude = std::numbers::pi / 2; break;
    case AssetKind::Bounce: p.amplitude = 0.45; break;
    case AssetKind::Orbit: p.amplitude = std::numbers::pi / 3; break;
    case AssetKind::Stretch: p.amplitude = 0.3; break;
  }
  return p;
}

void AnimatedAsset::validate() const {
  rest_mesh.validate();
  if (frames.size() < 2) throw std::invalid_argument("AnimatedAsset: need at least two frames");
  for (const Points& f : frames)
    if (f.rows() != rest_mesh.vertex_count()) throw std::invalid_argument("AnimatedAsset: vertex count varies");
  if ((frames[0] - rest_mesh.vertices).cwiseAbs().maxCoeff() > 1e-7)
    throw std::invalid_argument("AnimatedAsset: frame 0 differs from the rest mesh");
  if (colors.rows() != rest_mesh.vertex_count()) throw std::invalid_argument("AnimatedAsset: color count");
}

double motion_progress(int t, int frame_count) {
  const double s = static_cast<double>(t) / (frame_count - 1);
  return 0.5 - 0.5 * std::cos(std::numbers::pi * s);
}

Points bend_map(const Points& rest, double angle, double base_y, double length) {
  if (std::abs(angle) < 1e-12) return rest;
  const double radius = length / angle;
  Points out = rest;
  for (Eigen::Index i = 0; i < rest.rows(); ++i) {
    const double phi = angle * (rest(i, 1) - base_y) / length;
    const double r = radius - rest(i, 0);
    out(i, 0) = radius - r * std::cos(phi);
    out(i, 1) = base_y + r * std::sin(phi);
  }
  return out;
}

double max_frame_step(const std::vector<Points>& frames) {
  double worst = 0.0;
  for (size_t t = 1; t < frames.size(); ++t)
    worst = std::max(worst, (frames[t] - frames[t - 1]).rowwise().norm().maxCoeff());
  return worst;
}

namespace {

TriangleMesh append(const TriangleMesh& a, const TriangleMesh& b) {
  TriangleMesh m;
  m.vertices.resize(a.vertex_count() + b.vertex_count(), 3);
  m.vertices << a.vertices, b.vertices;
  m.faces.resize(a.face_count() + b.face_count(), 3);
  m.faces << a.faces, (b.faces.array() + static_cast<int32_t>(a.vertex_count())).matrix();
  return m;
}

void round_to_float(Points& p) {
  p = p.cast<float>().cast<double>();
}

Points rotate_y(const Points& p, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Points out = p;
  out.col(0) = c * p.col(0) + s * p.col(2);
  out.col(2) = -s * p.col(0) + c * p.col(2);
  return out;
}

}  // namespace

AnimatedAsset synthesize_asset(AssetKind kind, const AssetParams& params, int frame_count, uint64_t seed) {
  if (frame_count < 2) throw std::invalid_argument("synthesize_asset: frame count must be at least 2");
  if (params.resolution < 4) throw std::invalid_argument("synthesize_asset: resolution must be at least 4");
  if (!(params.max_step > 0.0)) throw std::invalid_argument("synthesize_asset: max_step must be positive");

  AnimatedAsset asset;
  asset.kind = kind;
  asset.seed = seed;
  asset.params = params;
  const int res = params.resolution;
  const double amp = params.amplitude;
  Eigen::Index moving_end = -1;  // bounce: vertices [0, moving_end) belong to the ball

  switch (kind) {
    case AssetKind::Bend: asset.rest_mesh = geom::make_cylinder(0.3, 0.9, res / 2, res); break;
    case AssetKind::Twist: asset.rest_mesh = geom::make_box({0.45, 0.9, 0.45}, std::max(2, res / 4)); break;
    case AssetKind::Bounce: {
      TriangleMesh ball = geom::make_uv_sphere(0.35, res / 2, res);
      ball.vertices.col(1).array() += 0.05;
      TriangleMesh floor = geom::make_box({0.9, 0.05, 0.9}, 2);
      floor.vertices.col(1).array() -= 0.35;
      moving_end = ball.vertex_count();
      asset.rest_mesh = append(ball, floor);
      break;
    }
    case AssetKind::Orbit: asset.rest_mesh = geom::make_box({0.9, 0.25, 0.3}, std::max(2, res / 4)); break;
    case AssetKind::Stretch: asset.rest_mesh = geom::make_cylinder(0.45, 0.9, res / 2, res); break;
  }
  round_to_float(asset.rest_mesh.vertices);
  const Points& rest = asset.rest_mesh.vertices;

  for (int t = 0; t < frame_count; ++t) {
    const double p = motion_progress(t, frame_count);
    Points f = rest;
    switch (kind) {
      case AssetKind::Bend: f = bend_map(rest, amp * p, -0.9, 1.8); break;
      case AssetKind::Twist:
        for (Eigen::Index i = 0; i < rest.rows(); ++i)
          f.row(i) = rotate_y(rest.row(i), amp * p * (rest(i, 1) + 0.9) / 1.8);
        break;
      case AssetKind::Bounce: {
        const double lift = amp * std::sin(std::numbers::pi * t / (frame_count - 1));
        f.topRows(moving_end).col(1).array() += lift;
        break;
      }
      case AssetKind::Orbit: f = rotate_y(rest, amp * p); break;
      case AssetKind::Stretch: {
        const double sy = 1.0 - amp * p;
        if (!(sy > 0.0)) throw std::invalid_argument("synthesize_asset: stretch amplitude must be below 1");
        f.col(1) *= sy;
        f.col(0) /= std::sqrt(sy);
        f.col(2) /= std::sqrt(sy);
        break;
      }
    }
    if (t == 0) f = rest;
    round_to_float(f);
    asset.frames.push_back(std::move(f));
  }

  const double step = max_frame_step(asset.frames);
  if (step > params.max_step)
    throw std::invalid_argument("synthesize_asset: per-frame displacement " + std::to_string(step) +
                                " exceeds max_step " + std::to_string(params.max_step));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> base_dist(0.2, 0.8), phase_dist(0.0, 2.0 * std::numbers::pi);
  const Eigen::Vector3d base(base_dist(rng), base_dist(rng), base_dist(rng));
  const Eigen::Vector3d phase(phase_dist(rng), phase_dist(rng), phase_dist(rng));
  asset.colors.resize(rest.rows(), 3);
  for (Eigen::Index i = 0; i < rest.rows(); ++i)
    for (int c = 0; c < 3; ++c)
      asset.colors(i, c) = std::clamp(base[c] + 0.25 * std::sin(5.0 * rest(i, c) + 3.0 * rest(i, (c + 1) % 3) + phase[c]),
                                      0.05, 0.95);
  round_to_float(asset.colors);
  asset.validate();
  return asset;
}

}  // namespace meshmotion::toydata
