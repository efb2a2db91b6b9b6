#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "meshmotion/common/kv.hpp"
#include "meshmotion/runner/config.hpp"
#include "meshmotion/runner/trajectory.hpp"
#include "meshmotion/toydata/dataset.hpp"

namespace meshmotion::eval {

/// Metrics averaged over timestamps t ≥ 1 (frame 0 is pinned to the input).
struct AssetMetrics {
  std::string id;
  double psnr = 0.0;
  double ssim = 0.0;
  double chamfer = 0.0;
};

struct AblationRow {
  std::string name;
  uint64_t seed = 0;
  double psnr = 0.0;
  double chamfer = 0.0;
};

struct EvalReport {
  std::vector<AssetMetrics> assets;
  AssetMetrics aggregate;  // mean of the asset rows
  kv::Document config;
  std::vector<AblationRow> ablation;

  void recompute_aggregate();
  /// Fixed-width text table of the asset rows, the aggregate and any ablation rows.
  std::string table() const;
  /// One key=value record per row, the config echo, then the text table as comments.
  void write(const std::filesystem::path& path) const;
};

/// Renders every predicted vertex trajectory with the ground-truth colors and
/// cameras (8-bit quantized like the dataset), then compares per timestamp.
/// Throws std::invalid_argument listing ids missing on either side.
EvalReport evaluate_run(const std::map<std::string, runner::Trajectory>& predictions,
                        const std::vector<toydata::DatasetRecord>& truth);

/// Frame-0-everywhere trajectories for each record.
std::map<std::string, runner::Trajectory> static_predictions(const std::vector<toydata::DatasetRecord>& truth);

/// Ground-truth vertex trajectories.
std::map<std::string, runner::Trajectory> truth_predictions(const std::vector<toydata::DatasetRecord>& truth);

struct AblationCase {
  std::string name;
  std::function<void(runner::RunConfig&)> apply;
};

/// MSE only, DIS only, and both.
std::vector<AblationCase> loss_ablation_cases();
/// Latent channel counts C0 ∈ {8, 16, 32} at the base width.
std::vector<AblationCase> latent_size_ablation_cases();

/// Reference rows for the loss and latent-size ablations at full model scale.
std::vector<AblationRow> reference_loss_rows();
std::vector<AblationRow> reference_latent_rows();

/// Trains one VAE per (case, seed) on `records` and scores its reconstruction:
/// deterministic latents from the true frames, decoded at the rest vertices.
std::vector<AblationRow> run_ablation(const runner::RunConfig& base, const std::vector<AblationCase>& cases,
                                      const std::vector<uint64_t>& seeds,
                                      const std::vector<toydata::DatasetRecord>& records);

/// Per-case means over seeds, in case order.
std::vector<AblationRow> ablation_means(const std::vector<AblationRow>& rows);

}  // namespace meshmotion::eval
