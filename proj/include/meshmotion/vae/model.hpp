#pragma once

#include <memory>
#include <random>
#include <vector>

#include "meshmotion/geom/embedding.hpp"
#include "meshmotion/nn/checkpoint.hpp"
#include "meshmotion/nn/layers.hpp"
#include "meshmotion/vae/config.hpp"
#include "meshmotion/vae/inputs.hpp"

namespace meshmotion::vae {

inline constexpr const char* kCheckpointTag = "vae";

/// Fourier features followed by a learned linear map to the model width.
template <class T>
struct PointEmbed {
  nn::Linear<T> proj;

  PointEmbed() = default;
  PointEmbed(nn::ParameterStore<T>& store, const std::string& name, Eigen::Index width, std::mt19937_64& rng)
      : proj(store, name, geom::kFourierFeatures, width, rng) {}

  nn::Var<T> operator()(nn::Var<T> fourier) const { return proj(fourier); }
};

template <class T>
struct ImageTokens {
  nn::Var<T> shuffled;  // v·(2H′)·(2W′) × C/2, after pixel shuffle and fusion
  nn::Var<T> fused;     // same rows, projected back to width C
  int views = 0;
  int grid_h = 0;  // H′
  int grid_w = 0;  // W′
};

template <class T>
struct KlOutput {
  nn::Var<T> mu;
  nn::Var<T> logvar;  // clamped to [-30, 20]
  nn::Var<T> sigma;
  nn::Var<T> z;
};

/// Plain-matrix view of a compressed latent.
template <class T>
struct CompressedLatent {
  nn::Matrix<T> z;
  nn::Matrix<T> mu;
  nn::Matrix<T> sigma;
};

template <class T>
class VaeModel {
 public:
  explicit VaeModel(const VaeConfig& config);

  const VaeConfig& config() const { return config_; }
  nn::ParameterStore<T>& store() { return *store_; }
  const nn::ParameterStore<T>& store() const { return *store_; }

  // Tape-level building blocks.
  nn::Var<T> encode_geometry(nn::Tape<T>& tape, const GeometryInput<T>& geo) const;
  ImageTokens<T> encode_multiview(nn::Tape<T>& tape, const ImageInput<T>& images) const;
  nn::Var<T> encode_motion(nn::Tape<T>& tape, const GeometryInput<T>& geo, const ImageInput<T>& images) const;
  /// The fusion cross-attention alone: geometry tokens attend to image tokens.
  nn::Var<T> fuse(nn::Var<T> geometry_tokens, nn::Var<T> image_tokens) const;
  /// `eps` null selects the deterministic mode (z = mu).
  KlOutput<T> kl_compress(nn::Var<T> features, const nn::Matrix<T>* eps) const;
  nn::Var<T> decode_queries(nn::Var<T> z, const geom::Points& queries) const;

  // Non-recording conveniences.
  nn::Matrix<T> latent_set(const GeometryInput<T>& geo, const ImageInput<T>& images) const;
  CompressedLatent<T> encode(const GeometryInput<T>& geo, const ImageInput<T>& images, std::mt19937_64* rng) const;
  nn::Matrix<T> decode(const nn::Matrix<T>& z, const geom::Points& queries) const;

  nn::Checkpoint to_checkpoint() const;
  static VaeModel from_checkpoint(const nn::Checkpoint& ck);

 private:
  VaeConfig config_;
  std::unique_ptr<nn::ParameterStore<T>> store_;

  PointEmbed<T> geo_embed_;
  nn::CrossAttentionBlock<T> geo_cross_;
  nn::Linear<T> patch_embed_;
  std::vector<nn::SelfAttentionBlock<T>> vit_;
  nn::LayerNorm<T> vit_norm_;
  nn::Linear<T> upsample_;
  std::vector<nn::SelfAttentionBlock<T>> fusion_;
  nn::Linear<T> fuse_out_;
  nn::CrossAttentionBlock<T> motion_cross_;
  std::vector<nn::SelfAttentionBlock<T>> enc_blocks_;
  nn::Linear<T> to_mu_, to_logvar_;
  nn::Linear<T> dec_in_;
  std::vector<nn::SelfAttentionBlock<T>> dec_blocks_;
  PointEmbed<T> query_embed_;
  nn::CrossAttentionBlock<T> dec_cross_;
  nn::LayerNorm<T> head_norm_;
  nn::Linear<T> head_;
};

/// Row permutation implementing the 2× pixel shuffle of a (views·H′·W′) × 2C
/// token matrix into (views·2H′·2W′) × C/2, as flat element indices.
std::vector<int> pixel_shuffle_index(int views, int grid_h, int grid_w, int channels_out);

}  // namespace meshmotion::vae
