#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "meshmotion/common/kv.hpp"
#include "meshmotion/diffusion/config.hpp"
#include "meshmotion/vae/config.hpp"

namespace meshmotion::runner {

struct OptimizerSettings {
  double lr = 1e-3;
  double lr_floor = 1e-5;  // cosine annealing end point
  int warmup = 100;
  int batch = 4;
  int epochs = 250;        // passes over all (asset, timestamp) pairs
  int max_steps = 0;       // 0: no cap
  double clip_norm = 1.0;
  int eval_every = 500;    // validation interval in steps; 0 evaluates only at the end
  int log_every = 1;

  void validate(const char* which) const;  // throws std::invalid_argument
};

struct RunConfig {
  std::filesystem::path dataset;
  std::filesystem::path output = "run";
  vae::VaeConfig vae;
  diffusion::DiffusionConfig diffusion;
  OptimizerSettings vae_train;
  OptimizerSettings diffusion_train;
  double delta = 0.01;     // refinement threshold in scene units
  int val_assets = 0;      // trailing passing assets held out for validation; 0 validates on training data
  int sampler_steps = 0;   // 0 uses diffusion.sampler_steps
  uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument

  /// Desk preset sized for CPU runs on the toy data.
  static RunConfig desk();

  /// Keys: run.dataset, run.output, run.delta, run.val_assets, run.seed,
  /// run.sampler_steps, vae.*, diffusion.*, vae_train.*, diffusion_train.*.
  static RunConfig from_document(const kv::Document& doc, const RunConfig& base);
  static RunConfig from_document(const kv::Document& doc);
  void write_to(kv::Document& doc) const;

  /// Reseeds every stochastic component from one value.
  void apply_seed(uint64_t value);
};

}  // namespace meshmotion::runner
