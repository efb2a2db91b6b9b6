#pragma once

#include <cstdint>

#include "meshmotion/common/kv.hpp"

namespace meshmotion::vae {

struct VaeConfig {
  int points = 2048;         // N, surface samples of the rest shape
  int latents = 64;          // M
  int width = 128;           // C
  int latent_channels = 32;  // C0
  int depth = 4;             // L, self-attention blocks in encoder and decoder
  int heads = 4;
  int patch = 8;
  int vit_depth = 4;
  int fusion_depth = 1;
  int mlp_ratio = 4;
  double lambda = 0.1;       // DIS weight
  double mse_weight = 1.0;
  double kl_weight = 0.001;
  int train_queries = 0;     // decoded points per training sample; 0 uses all N
  uint64_t seed = 0;         // parameter initialization

  void validate() const;  // throws std::invalid_argument

  static VaeConfig desk();
  static VaeConfig full();

  /// `vae.*` keys; missing keys keep the values of `base`.
  static VaeConfig from_document(const kv::Document& doc, const VaeConfig& base = desk());
  void write_to(kv::Document& doc) const;
};

}  // namespace meshmotion::vae
