#pragma once

#include <memory>
#include <random>
#include <vector>

#include "meshmotion/diffusion/config.hpp"
#include "meshmotion/diffusion/edm.hpp"
#include "meshmotion/nn/checkpoint.hpp"
#include "meshmotion/nn/layers.hpp"
#include "meshmotion/vae/inputs.hpp"
#include "meshmotion/vae/model.hpp"

namespace meshmotion::diffusion {

inline constexpr const char* kCheckpointTag = "diffusion";

/// Encoded conditions for one clip: geometry tokens of P1 and per-frame tokens
/// stacked frame-major.
template <class T>
struct Conditioning {
  nn::Var<T> geometry;  // G×C
  nn::Var<T> frames;    // (T·P)×C
  int frame_count = 0;
};

/// Sub-layers that can be bypassed for structural tests.
struct BlockMask {
  bool spatial = true;
  bool geometry = true;
  bool frames = true;
  bool temporal = true;
};

/// Pre-norm sub-layer with adaptive scale and shift predicted from the noise embedding.
template <class T>
struct AdaNorm {
  nn::Linear<T> scale, shift;

  AdaNorm() = default;
  AdaNorm(nn::ParameterStore<T>& store, const std::string& name, Eigen::Index width, std::mt19937_64& rng)
      : scale(store, name + ".scale", width, width, rng, true), shift(store, name + ".shift", width, width, rng, true) {}

  nn::Var<T> operator()(nn::Var<T> x, nn::Var<T> emb) const {
    return nn::modulate(nn::layer_norm(x), scale(emb), shift(emb));
  }
};

template <class T>
struct DenoiserBlock {
  AdaNorm<T> norm_spatial, norm_geo, norm_frame, norm_temporal, norm_mlp;
  nn::LayerNorm<T> ctx_geo, ctx_frame;
  nn::MultiHeadAttention<T> spatial, geo, frame, temporal;
  nn::Mlp<T> mlp;
};

template <class T>
class DiffusionModel {
 public:
  explicit DiffusionModel(const DiffusionConfig& config);

  const DiffusionConfig& config() const { return config_; }
  DiffusionConfig& mutable_config() { return config_; }
  nn::ParameterStore<T>& store() { return *store_; }
  const nn::ParameterStore<T>& store() const { return *store_; }

  /// `frames` holds one single-view image input per timestamp.
  Conditioning<T> condition(nn::Tape<T>& tape, const vae::GeometryInput<T>& geometry,
                            const std::vector<const vae::ImageInput<T>*>& frames) const;

  /// F(x_in, c_noise): x_in is (T·M)×C0 stacked frame-major.
  nn::Var<T> network(nn::Var<T> x_in, T c_noise, const Conditioning<T>& cond, const BlockMask& mask = {}) const;

  /// Preconditioned denoiser D(x, σ).
  nn::Var<T> denoise(nn::Var<T> x, double sigma, const Conditioning<T>& cond, const BlockMask& mask = {}) const;

  nn::Checkpoint to_checkpoint() const;
  static DiffusionModel from_checkpoint(const nn::Checkpoint& ck);

 private:
  DiffusionConfig config_;
  std::unique_ptr<nn::ParameterStore<T>> store_;
  vae::PointEmbed<T> geo_embed_;
  nn::CrossAttentionBlock<T> geo_cross_;
  nn::Linear<T> patch_embed_;
  std::vector<nn::SelfAttentionBlock<T>> frame_blocks_;
  nn::LayerNorm<T> frame_norm_;
  nn::Linear<T> noise_fc1_, noise_fc2_;
  nn::Linear<T> in_proj_;
  std::vector<DenoiserBlock<T>> blocks_;
  AdaNorm<T> out_norm_;
  nn::Linear<T> out_proj_;
};

/// Sinusoidal features of a scalar, 1×dim with dim even.
template <class T>
nn::Matrix<T> scalar_embedding(T value, int dim);

}  // namespace meshmotion::diffusion
