#include "meshmotion/diffusion/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "meshmotion/errors.hpp"

namespace meshmotion::diffusion {

using nn::Matrix;
using nn::Tape;
using nn::Var;

template <class T>
Matrix<T> scalar_embedding(T value, int dim) {
  if (dim < 2 || dim % 2 != 0) throw std::invalid_argument("scalar_embedding: dim must be even");
  const int half = dim / 2;
  Matrix<T> out(1, dim);
  for (int i = 0; i < half; ++i) {
    // Frequencies from 1 to 1000, geometric.
    const double f = half > 1 ? std::exp(std::log(1000.0) * i / (half - 1)) : 1.0;
    out(0, i) = static_cast<T>(std::cos(f * static_cast<double>(value)));
    out(0, half + i) = static_cast<T>(std::sin(f * static_cast<double>(value)));
  }
  return out;
}

template <class T>
DiffusionModel<T>::DiffusionModel(const DiffusionConfig& config)
    : config_(config), store_(std::make_unique<nn::ParameterStore<T>>()) {
  config_.validate();
  std::mt19937_64 rng(config_.seed);
  auto& s = *store_;
  const Eigen::Index C = config_.width;
  const int heads = config_.heads, r = config_.mlp_ratio;
  geo_embed_ = vae::PointEmbed<T>(s, "cond.geo_embed", C, rng);
  geo_cross_ = nn::CrossAttentionBlock<T>(s, "cond.geo_cross", C, C, heads, rng, r);
  patch_embed_ = nn::Linear<T>(s, "cond.patch", static_cast<Eigen::Index>(config_.patch) * config_.patch * vae::kImageChannels, C, rng);
  for (int i = 0; i < config_.frame_depth; ++i)
    frame_blocks_.emplace_back(s, "cond.frame" + std::to_string(i), C, heads, rng, r);
  frame_norm_ = nn::LayerNorm<T>(s, "cond.frame_norm", C);
  noise_fc1_ = nn::Linear<T>(s, "noise.fc1", C, C, rng);
  noise_fc2_ = nn::Linear<T>(s, "noise.fc2", C, C, rng);
  in_proj_ = nn::Linear<T>(s, "den.in", config_.latent_channels, C, rng);
  for (int i = 0; i < config_.depth; ++i) {
    const std::string p = "den.block" + std::to_string(i);
    DenoiserBlock<T> b;
    b.norm_spatial = AdaNorm<T>(s, p + ".ada_spatial", C, rng);
    b.spatial = nn::MultiHeadAttention<T>(s, p + ".spatial", C, C, heads, rng);
    b.norm_geo = AdaNorm<T>(s, p + ".ada_geo", C, rng);
    b.ctx_geo = nn::LayerNorm<T>(s, p + ".ctx_geo", C);
    b.geo = nn::MultiHeadAttention<T>(s, p + ".geo", C, C, heads, rng);
    b.norm_frame = AdaNorm<T>(s, p + ".ada_frame", C, rng);
    b.ctx_frame = nn::LayerNorm<T>(s, p + ".ctx_frame", C);
    b.frame = nn::MultiHeadAttention<T>(s, p + ".frame", C, C, heads, rng);
    b.norm_temporal = AdaNorm<T>(s, p + ".ada_temporal", C, rng);
    b.temporal = nn::MultiHeadAttention<T>(s, p + ".temporal", C, C, heads, rng);
    b.norm_mlp = AdaNorm<T>(s, p + ".ada_mlp", C, rng);
    b.mlp = nn::Mlp<T>(s, p + ".mlp", C, C * r, rng);
    blocks_.push_back(b);
  }
  out_norm_ = AdaNorm<T>(s, "den.out_norm", C, rng);
  out_proj_ = nn::Linear<T>(s, "den.out", C, config_.latent_channels, rng, /*zero_init=*/true);
}

template <class T>
Conditioning<T> DiffusionModel<T>::condition(Tape<T>& tape, const vae::GeometryInput<T>& geometry,
                                             const std::vector<const vae::ImageInput<T>*>& frames) const {
  if (static_cast<int>(geometry.anchors.size()) != config_.geometry_tokens)
    throw std::invalid_argument("condition: anchor count differs from geometry_tokens");
  if (frames.empty()) throw std::invalid_argument("condition: no frames");
  Conditioning<T> c;
  const Var<T> all = geo_embed_(tape.constant(geometry.features));
  c.geometry = geo_cross_(nn::gather_rows(all, geometry.anchors), all);

  const Eigen::Index expected = static_cast<Eigen::Index>(config_.patch) * config_.patch * vae::kImageChannels;
  const vae::ImageInput<T>& first = *frames.front();
  const Eigen::Index per_frame = first.patches.rows();
  Matrix<T> patches(per_frame * static_cast<Eigen::Index>(frames.size()), expected);
  for (size_t t = 0; t < frames.size(); ++t) {
    const vae::ImageInput<T>& f = *frames[t];
    if (f.patches.cols() != expected || f.patch != config_.patch)
      throw std::invalid_argument("condition: frame patches do not match the configured patch size");
    if (f.patches.rows() != per_frame || f.grid_h != first.grid_h || f.grid_w != first.grid_w)
      throw std::invalid_argument("condition: frames differ in token count");
    patches.middleRows(static_cast<Eigen::Index>(t) * per_frame, per_frame) = f.patches;
  }
  const Matrix<T> pos = vae::sincos_2d<T>(first.grid_h, first.grid_w, config_.width);
  Matrix<T> pos_all(patches.rows(), config_.width);
  const Eigen::Index views_per_frame = per_frame / pos.rows();
  for (Eigen::Index b = 0; b < static_cast<Eigen::Index>(frames.size()) * views_per_frame; ++b)
    pos_all.middleRows(b * pos.rows(), pos.rows()) = pos;
  const int count = static_cast<int>(frames.size());
  Var<T> x = nn::add(patch_embed_(tape.constant(patches)), tape.constant(pos_all));
  for (const auto& blk : frame_blocks_) x = blk(x, count);
  c.frames = frame_norm_(x);
  c.frame_count = count;
  return c;
}

template <class T>
Var<T> DiffusionModel<T>::network(Var<T> x_in, T c_noise, const Conditioning<T>& cond, const BlockMask& mask) const {
  const Eigen::Index M = config_.latents;
  const int frames = cond.frame_count;
  if (x_in.cols() != config_.latent_channels)
    throw std::invalid_argument("denoiser: latent channel count mismatch");
  if (frames < 1 || x_in.rows() != M * frames)
    throw std::invalid_argument("denoiser: latent rows must equal timestamps x latent tokens");
  Tape<T>& tape = *x_in.tape;

  const Var<T> emb = nn::silu(noise_fc2_(nn::silu(noise_fc1_(tape.constant(scalar_embedding<T>(c_noise, config_.width))))));

  // Frame-major (t, m) order and its token-major (m, t) transpose.
  std::vector<int> to_token_major(static_cast<size_t>(M * frames)), to_frame_major(to_token_major.size());
  for (int t = 0; t < frames; ++t)
    for (Eigen::Index m = 0; m < M; ++m) {
      const int fm = static_cast<int>(t * M + m), tm = static_cast<int>(m * frames + t);
      to_token_major[static_cast<size_t>(tm)] = fm;
      to_frame_major[static_cast<size_t>(fm)] = tm;
    }

  Var<T> x = in_proj_(x_in);
  for (const DenoiserBlock<T>& b : blocks_) {
    if (mask.spatial) {
      const Var<T> h = b.norm_spatial(x, emb);
      x = nn::add(x, b.spatial(h, h, frames));
    }
    if (mask.geometry) x = nn::add(x, b.geo(b.norm_geo(x, emb), b.ctx_geo(cond.geometry)));
    if (mask.frames) x = nn::add(x, b.frame(b.norm_frame(x, emb), b.ctx_frame(cond.frames), frames));
    if (mask.temporal) {
      const Var<T> h = nn::gather_rows(b.norm_temporal(x, emb), to_token_major);
      x = nn::add(x, nn::gather_rows(b.temporal(h, h, static_cast<int>(M)), to_frame_major));
    }
    x = nn::add(x, b.mlp(b.norm_mlp(x, emb)));
  }
  return out_proj_(out_norm_(x, emb));
}

template <class T>
Var<T> DiffusionModel<T>::denoise(Var<T> x, double sigma, const Conditioning<T>& cond, const BlockMask& mask) const {
  const Network<T> f = [&](Var<T> in, T c_noise) { return network(in, c_noise, cond, mask); };
  return edm_denoise<T>(x, sigma, config_.sigma_data, f);
}

template <class T>
nn::Checkpoint DiffusionModel<T>::to_checkpoint() const {
  nn::Checkpoint ck;
  ck.tag = kCheckpointTag;
  config_.write_to(ck.config);
  ck.tensors = nn::export_parameters(*store_);
  return ck;
}

template <class T>
DiffusionModel<T> DiffusionModel<T>::from_checkpoint(const nn::Checkpoint& ck) {
  if (ck.tag != kCheckpointTag) throw ConfigError("expected a diffusion checkpoint, found tag '" + ck.tag + "'");
  DiffusionModel<T> model(DiffusionConfig::from_document(ck.config));
  nn::import_parameters(*model.store_, ck.tensors);
  return model;
}

template nn::Matrix<float> scalar_embedding<float>(float, int);
template nn::Matrix<double> scalar_embedding<double>(double, int);
template class DiffusionModel<float>;
template class DiffusionModel<double>;

}  // namespace meshmotion::diffusion
