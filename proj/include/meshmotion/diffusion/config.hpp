#pragma once

#include <cstdint>

#include "meshmotion/common/kv.hpp"

namespace meshmotion::diffusion {

struct DiffusionConfig {
  int latents = 64;          // M, must match the VAE
  int latent_channels = 32;  // C0, must match the VAE
  int width = 128;           // internal denoiser width
  int depth = 6;             // denoiser blocks
  int heads = 4;
  int mlp_ratio = 4;
  int geometry_tokens = 64;  // FPS anchors of the conditioning shape
  int patch = 8;             // frame patch size
  int frame_depth = 1;       // self-attention blocks over each frame's tokens
  double sigma_data = 0.5;
  double sigma_min = 0.002;
  double sigma_max = 80.0;
  double rho = 7.0;
  int sampler_steps = 18;
  double p_mean = -1.2;
  double p_std = 1.2;
  int subset_divisor = 3;     // T′ = ⌈T / divisor⌉
  double latent_scale = 1.0;  // raw VAE latents are multiplied by this before diffusion
  uint64_t seed = 0;

  void validate() const;  // throws std::invalid_argument

  /// `diffusion.*` keys; missing keys keep the values of `base` (defaults when omitted).
  static DiffusionConfig from_document(const kv::Document& doc);
  static DiffusionConfig from_document(const kv::Document& doc, const DiffusionConfig& base);
  void write_to(kv::Document& doc) const;
};

}  // namespace meshmotion::diffusion
