#include "meshmotion/vae/model.hpp"

#include <stdexcept>

#include "meshmotion/errors.hpp"

namespace meshmotion::vae {

using nn::Matrix;
using nn::Tape;
using nn::Var;

std::vector<int> pixel_shuffle_index(int views, int grid_h, int grid_w, int channels_out) {
  const int out_w = 2 * grid_w;
  const int per_view_out = 4 * grid_h * grid_w;
  const int in_cols = 4 * channels_out;
  std::vector<int> index(static_cast<size_t>(views) * per_view_out * channels_out);
  for (int v = 0; v < views; ++v)
    for (int h = 0; h < grid_h; ++h)
      for (int w = 0; w < grid_w; ++w) {
        const int src_row = (v * grid_h + h) * grid_w + w;
        for (int k = 0; k < 4; ++k) {
          const int dy = k / 2, dx = k % 2;
          const int dst_row = v * per_view_out + (2 * h + dy) * out_w + (2 * w + dx);
          for (int c = 0; c < channels_out; ++c)
            index[static_cast<size_t>(dst_row) * channels_out + c] = src_row * in_cols + k * channels_out + c;
        }
      }
  return index;
}

template <class T>
VaeModel<T>::VaeModel(const VaeConfig& config) : config_(config), store_(std::make_unique<nn::ParameterStore<T>>()) {
  config_.validate();
  std::mt19937_64 rng(config_.seed);
  auto& s = *store_;
  const Eigen::Index C = config_.width, half = C / 2;
  const int heads = config_.heads, r = config_.mlp_ratio;
  geo_embed_ = PointEmbed<T>(s, "geo.embed", C, rng);
  geo_cross_ = nn::CrossAttentionBlock<T>(s, "geo.cross", C, C, heads, rng, r);
  patch_embed_ = nn::Linear<T>(s, "img.patch", static_cast<Eigen::Index>(config_.patch) * config_.patch * kImageChannels, C, rng);
  for (int i = 0; i < config_.vit_depth; ++i)
    vit_.emplace_back(s, "img.vit" + std::to_string(i), C, heads, rng, r);
  vit_norm_ = nn::LayerNorm<T>(s, "img.vit_norm", C);
  upsample_ = nn::Linear<T>(s, "img.upsample", C, 2 * C, rng);
  for (int i = 0; i < config_.fusion_depth; ++i)
    fusion_.emplace_back(s, "img.fusion" + std::to_string(i), half, heads, rng, r);
  fuse_out_ = nn::Linear<T>(s, "img.fuse_out", half, C, rng);
  motion_cross_ = nn::CrossAttentionBlock<T>(s, "enc.cross", C, C, heads, rng, r);
  for (int i = 0; i < config_.depth; ++i)
    enc_blocks_.emplace_back(s, "enc.block" + std::to_string(i), C, heads, rng, r);
  to_mu_ = nn::Linear<T>(s, "kl.mu", C, config_.latent_channels, rng);
  to_logvar_ = nn::Linear<T>(s, "kl.logvar", C, config_.latent_channels, rng);
  dec_in_ = nn::Linear<T>(s, "dec.in", config_.latent_channels, C, rng);
  for (int i = 0; i < config_.depth; ++i)
    dec_blocks_.emplace_back(s, "dec.block" + std::to_string(i), C, heads, rng, r);
  query_embed_ = PointEmbed<T>(s, "dec.query_embed", C, rng);
  dec_cross_ = nn::CrossAttentionBlock<T>(s, "dec.cross", C, C, heads, rng, r);
  head_norm_ = nn::LayerNorm<T>(s, "dec.head_norm", C);
  head_ = nn::Linear<T>(s, "dec.head", C, 3, rng, /*zero_init=*/true);
}

template <class T>
Var<T> VaeModel<T>::encode_geometry(Tape<T>& tape, const GeometryInput<T>& geo) const {
  if (static_cast<int>(geo.anchors.size()) != config_.latents)
    throw std::invalid_argument("encode_geometry: anchor count differs from the latent count");
  if (geo.features.cols() != geom::kFourierFeatures)
    throw std::invalid_argument("encode_geometry: unexpected feature width");
  const Var<T> all = geo_embed_(tape.constant(geo.features));
  const Var<T> queries = nn::gather_rows(all, geo.anchors);
  return geo_cross_(queries, all);
}

template <class T>
ImageTokens<T> VaeModel<T>::encode_multiview(Tape<T>& tape, const ImageInput<T>& images) const {
  const Eigen::Index expected = static_cast<Eigen::Index>(config_.patch) * config_.patch * kImageChannels;
  if (images.patches.cols() != expected || images.patch != config_.patch)
    throw std::invalid_argument("encode_multiview: expected " + std::to_string(kImageChannels) +
                                "-channel patches of size " + std::to_string(config_.patch));
  if (images.views < 1 || images.patches.rows() != static_cast<Eigen::Index>(images.views) * images.tokens_per_view())
    throw std::invalid_argument("encode_multiview: token count does not match the view grid");
  const int C = config_.width;
  const Matrix<T> pos = sincos_2d<T>(images.grid_h, images.grid_w, C);
  Matrix<T> pos_all(images.patches.rows(), C);
  for (int v = 0; v < images.views; ++v) pos_all.middleRows(static_cast<Eigen::Index>(v) * pos.rows(), pos.rows()) = pos;

  Var<T> x = nn::add(patch_embed_(tape.constant(images.patches)), tape.constant(pos_all));
  for (const auto& blk : vit_) x = blk(x, images.views);
  x = vit_norm_(x);
  const Var<T> up = upsample_(x);
  const int half = C / 2;
  Var<T> shuffled = nn::gather_elements(up, static_cast<Eigen::Index>(images.views) * 4 * images.tokens_per_view(), half,
                                        pixel_shuffle_index(images.views, images.grid_h, images.grid_w, half));
  for (const auto& blk : fusion_) shuffled = blk(shuffled, 1);
  ImageTokens<T> out;
  out.shuffled = shuffled;
  out.fused = fuse_out_(shuffled);
  out.views = images.views;
  out.grid_h = images.grid_h;
  out.grid_w = images.grid_w;
  return out;
}

template <class T>
Var<T> VaeModel<T>::encode_motion(Tape<T>& tape, const GeometryInput<T>& geo, const ImageInput<T>& images) const {
  const Var<T> g = encode_geometry(tape, geo);
  const ImageTokens<T> img = encode_multiview(tape, images);
  Var<T> f = fuse(g, img.fused);
  for (const auto& blk : enc_blocks_) f = blk(f);
  return f;
}

template <class T>
Var<T> VaeModel<T>::fuse(Var<T> geometry_tokens, Var<T> image_tokens) const {
  return motion_cross_(geometry_tokens, image_tokens);
}

template <class T>
KlOutput<T> VaeModel<T>::kl_compress(Var<T> features, const Matrix<T>* eps) const {
  KlOutput<T> out;
  out.mu = to_mu_(features);
  out.logvar = nn::clamp(to_logvar_(features), T(-30), T(20));
  out.sigma = nn::exp(nn::scale(out.logvar, T(0.5)));
  if (!out.mu.value().allFinite() || !out.sigma.value().allFinite())
    throw NumericError("kl_compress: non-finite activations");
  if (eps) {
    if (eps->rows() != out.mu.rows() || eps->cols() != out.mu.cols())
      throw std::invalid_argument("kl_compress: noise shape mismatch");
    out.z = nn::add(out.mu, nn::mul_constant(out.sigma, *eps));
  } else {
    out.z = out.mu;
  }
  return out;
}

template <class T>
Var<T> VaeModel<T>::decode_queries(Var<T> z, const geom::Points& queries) const {
  if (z.rows() != config_.latents || z.cols() != config_.latent_channels)
    throw std::invalid_argument("decode_queries: latent shape must be M x C0");
  if (queries.rows() < 1) throw std::invalid_argument("decode_queries: no queries");
  Tape<T>& tape = *z.tape;
  Var<T> h = dec_in_(z);
  for (const auto& blk : dec_blocks_) h = blk(h);
  const Var<T> q = query_embed_(tape.constant(geom::fourier_features(queries).cast<T>()));
  const Var<T> feat = dec_cross_(q, h);
  const Var<T> offset = head_(head_norm_(feat));
  return nn::add(tape.constant(queries.cast<T>()), offset);
}

template <class T>
Matrix<T> VaeModel<T>::latent_set(const GeometryInput<T>& geo, const ImageInput<T>& images) const {
  Tape<T> tape(false);
  return encode_motion(tape, geo, images).value();
}

template <class T>
CompressedLatent<T> VaeModel<T>::encode(const GeometryInput<T>& geo, const ImageInput<T>& images,
                                        std::mt19937_64* rng) const {
  Tape<T> tape(false);
  const Var<T> f = encode_motion(tape, geo, images);
  Matrix<T> eps;
  if (rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    eps.resize(config_.latents, config_.latent_channels);
    for (Eigen::Index i = 0; i < eps.size(); ++i) eps.data()[i] = static_cast<T>(normal(*rng));
  }
  const KlOutput<T> k = kl_compress(f, rng ? &eps : nullptr);
  return {k.z.value(), k.mu.value(), k.sigma.value()};
}

template <class T>
Matrix<T> VaeModel<T>::decode(const Matrix<T>& z, const geom::Points& queries) const {
  Tape<T> tape(false);
  return decode_queries(tape.constant(z), queries).value();
}

template <class T>
nn::Checkpoint VaeModel<T>::to_checkpoint() const {
  nn::Checkpoint ck;
  ck.tag = kCheckpointTag;
  config_.write_to(ck.config);
  ck.tensors = nn::export_parameters(*store_);
  return ck;
}

template <class T>
VaeModel<T> VaeModel<T>::from_checkpoint(const nn::Checkpoint& ck) {
  if (ck.tag != kCheckpointTag) throw ConfigError("expected a vae checkpoint, found tag '" + ck.tag + "'");
  VaeModel<T> model(VaeConfig::from_document(ck.config));
  nn::import_parameters(*model.store_, ck.tensors);
  return model;
}

template class VaeModel<float>;
template class VaeModel<double>;

}  // namespace meshmotion::vae
