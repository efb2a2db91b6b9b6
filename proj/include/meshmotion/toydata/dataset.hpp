#pragma once

#include <Eigen/Geometry>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "meshmotion/common/kv.hpp"
#include "meshmotion/geom/sampling.hpp"
#include "meshmotion/toydata/asset.hpp"
#include "meshmotion/toydata/filters.hpp"
#include "meshmotion/toydata/render.hpp"

namespace meshmotion::toydata {

struct AssetSpec {
  AssetKind kind = AssetKind::Bend;
  AssetParams params;
  uint64_t seed = 0;
};

struct DatasetConfig {
  std::vector<AssetSpec> assets;
  int frames = 10;
  int width = 64;
  int height = 64;
  int points = 2048;  // surface samples per asset, half random and half FPS
  double ssim_threshold = kDefaultSsimThreshold;
  Eigen::AlignedBox3d bounds{Eigen::Vector3d::Constant(-1.0), Eigen::Vector3d::Constant(1.0)};

  void validate() const;

  /// `count` assets cycling through every kind with seeded amplitude jitter.
  static DatasetConfig mixed(int count, uint64_t seed);

  /// Reads `data.*` keys: count, seed, frames, width, height, points,
  /// ssim_threshold, bounds (six numbers), kinds (comma list), static (bool).
  static DatasetConfig from_document(const kv::Document& doc);
};

struct DatasetRecord {
  std::string id;
  AssetKind kind = AssetKind::Bend;
  uint64_t seed = 0;
  geom::TriangleMesh rest_mesh;
  geom::Points colors;
  std::vector<geom::Points> vertex_frames;  // T × V×3
  std::vector<geom::Points> point_frames;   // T × N×3 surface-sample trajectories
  std::vector<MultiViewFrame> views;        // T entries
  SsimFilterResult ssim;
  BoundsFilterResult bounds;

  bool passed() const { return ssim.keep && bounds.keep; }
  int frame_count() const { return static_cast<int>(vertex_frames.size()); }
  void validate() const;
};

struct ManifestEntry {
  std::string id;
  AssetKind kind = AssetKind::Bend;
  uint64_t seed = 0;
  double ssim_score = 0.0;
  bool ssim_keep = true;
  bool bounds_keep = true;
  int bounds_frame = -1;

  bool passed() const { return ssim_keep && bounds_keep; }
  std::string reason() const;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  int pass_count() const;
};

std::string asset_id(int index);

/// Synthesizes, renders (8-bit quantized) and filters one asset.
DatasetRecord make_record(const AssetSpec& spec, int index, const DatasetConfig& config);

/// Writes every passing record plus `manifest.txt` covering all assets.
Manifest build_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir);

Manifest read_manifest(const std::filesystem::path& dataset_dir);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

void write_record(const std::filesystem::path& dataset_dir, const DatasetRecord& record);
DatasetRecord load_record(const std::filesystem::path& dataset_dir, const std::string& id);

/// Loads every passing record listed in the manifest.
std::vector<DatasetRecord> load_dataset(const std::filesystem::path& dataset_dir);

}  // namespace meshmotion::toydata
