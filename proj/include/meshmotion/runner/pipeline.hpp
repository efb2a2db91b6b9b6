#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "meshmotion/diffusion/model.hpp"
#include "meshmotion/runner/config.hpp"
#include "meshmotion/runner/trajectory.hpp"
#include "meshmotion/toydata/dataset.hpp"
#include "meshmotion/vae/model.hpp"

namespace meshmotion::runner {

/// Network inputs derived once per dataset asset.
struct PreparedAsset {
  const toydata::DatasetRecord* record = nullptr;
  vae::GeometryInput<float> vae_geometry;
  vae::GeometryInput<float> diffusion_geometry;
  std::vector<vae::ImageInput<float>> views;  // all views, one per timestamp
  std::vector<vae::ImageInput<float>> front;  // view 0 only, one per timestamp

  int frame_count() const { return static_cast<int>(views.size()); }
  std::vector<const vae::ImageInput<float>*> front_ptrs() const;
};

/// Throws ConfigError when the records do not fit the configured models.
std::vector<PreparedAsset> prepare_assets(const std::vector<toydata::DatasetRecord>& records, const RunConfig& config);

/// Mean over (asset, t) of CD(decode(encode(P1, I_t)), P_t) with deterministic latents.
double reconstruction_chamfer(const vae::VaeModel<float>& model, const std::vector<PreparedAsset>& assets);

/// Mean over (asset, t) of CD(P1, P_t).
double identity_chamfer(const std::vector<PreparedAsset>& assets);

struct StepRecord {
  long step = 0;
  double lr = 0.0;
  double loss = 0.0;         // total objective
  double deformation = 0.0;  // VAE only
  double kl = 0.0;           // VAE only
};

struct EvalRecord {
  long step = 0;
  double chamfer = 0.0;
};

struct VaeRun {
  vae::VaeModel<float> model;  // best by validation Chamfer
  std::vector<StepRecord> steps;
  std::vector<EvalRecord> evals;
  long best_step = 0;
  double best_chamfer = 0.0;
  double baseline_chamfer = 0.0;
};

/// Number of optimizer steps implied by epochs, batch and the optional cap.
long planned_steps(const OptimizerSettings& opt, long samples);

VaeRun train_vae(const RunConfig& config, const std::vector<toydata::DatasetRecord>& train,
                 const std::vector<toydata::DatasetRecord>& validation, std::ostream* log = nullptr);

/// Deterministic-mode latents per asset, (T·M)×C0 frame-major, tied to the encoder weights.
struct LatentCache {
  std::vector<std::string> ids;
  std::vector<nn::Matrix<float>> latents;
  uint64_t encoder_hash = 0;

  void save(const std::filesystem::path& path) const;
  static LatentCache load(const std::filesystem::path& path);
};

uint64_t parameter_hash(const nn::ParameterStore<float>& store);

LatentCache encode_latents(const vae::VaeModel<float>& model, const std::vector<PreparedAsset>& assets);

/// Loads `path` when it matches the model and asset ids, otherwise encodes and writes it.
LatentCache cached_latents(const vae::VaeModel<float>& model, const std::vector<PreparedAsset>& assets,
                           const std::filesystem::path& path);

/// σ_data divided by the root-mean-square latent entry.
double latent_scale(const LatentCache& cache, double sigma_data);

struct DiffusionRun {
  diffusion::DiffusionModel<float> model;
  std::vector<StepRecord> steps;
};

/// Throws ConfigError when latent shapes differ between the two models.
void check_compatible(const vae::VaeConfig& vae, const diffusion::DiffusionConfig& diffusion);

DiffusionRun train_diffusion(const RunConfig& config, const vae::VaeModel<float>& vae_model,
                             const std::vector<toydata::DatasetRecord>& train,
                             const std::optional<std::filesystem::path>& cache_path = std::nullopt,
                             std::ostream* log = nullptr);

/// Mesh plus monocular frames to a vertex trajectory; frame 0 is the input verbatim.
Trajectory infer(const geom::TriangleMesh& mesh, const std::vector<toydata::Image>& frames, const geom::Camera& camera,
                 const vae::VaeModel<float>& vae_model, const diffusion::DiffusionModel<float>& diffusion_model,
                 int steps, uint64_t seed);

/// Sorted *.png files of a directory. The camera comes from camera.txt there when
/// present, else the default front camera at the frame resolution.
struct FrameSequence {
  std::vector<toydata::Image> images;
  geom::Camera camera;
};
FrameSequence load_frames(const std::filesystem::path& dir);

void write_step_log(const std::filesystem::path& path, const std::vector<StepRecord>& steps,
                    const std::vector<EvalRecord>& evals = {});

}  // namespace meshmotion::runner
