#include "meshmotion/diffusion/train.hpp"

#include <cmath>
#include <stdexcept>

#include "meshmotion/errors.hpp"

namespace meshmotion::diffusion {

using nn::Matrix;
using nn::Tape;
using nn::Var;

template <class T>
NoiseDraw<T> draw_noise(const DiffusionConfig& config, int frames, std::mt19937_64& rng) {
  if (frames < 3) throw std::invalid_argument("diffusion loss: need at least 3 timestamps");
  std::normal_distribution<double> normal(0.0, 1.0);
  NoiseDraw<T> d;
  d.sigma = std::exp(config.p_mean + config.p_std * normal(rng));
  d.subset = sample_subset(frames, subset_size(frames, config.subset_divisor), rng);
  d.noise.resize(static_cast<Eigen::Index>(d.subset.size()) * config.latents, config.latent_channels);
  for (Eigen::Index i = 0; i < d.noise.size(); ++i) d.noise.data()[i] = static_cast<T>(d.sigma * normal(rng));
  return d;
}

template <class T>
Matrix<T> select_frames(const Matrix<T>& latents, int tokens, const std::vector<int>& subset) {
  Matrix<T> out(static_cast<Eigen::Index>(subset.size()) * tokens, latents.cols());
  for (size_t i = 0; i < subset.size(); ++i) {
    const Eigen::Index src = static_cast<Eigen::Index>(subset[i]) * tokens;
    if (subset[i] < 0 || src + tokens > latents.rows()) throw std::invalid_argument("select_frames: timestamp out of range");
    out.middleRows(static_cast<Eigen::Index>(i) * tokens, tokens) = latents.middleRows(src, tokens);
  }
  return out;
}

template <class T>
Var<T> diffusion_loss(Tape<T>& tape, const DiffusionModel<T>& model, const DiffusionSample<T>& sample,
                      const NoiseDraw<T>& draw) {
  const DiffusionConfig& cfg = model.config();
  const int frames = static_cast<int>(sample.frames.size());
  if (!sample.latents || sample.latents->rows() != static_cast<Eigen::Index>(frames) * cfg.latents)
    throw std::invalid_argument("diffusion loss: latent rows do not match the frame count");
  std::vector<const vae::ImageInput<T>*> chosen;
  for (int t : draw.subset) chosen.push_back(sample.frames.at(static_cast<size_t>(t)));
  const Conditioning<T> cond = model.condition(tape, *sample.geometry, chosen);
  const Matrix<T> clean = select_frames(*sample.latents, cfg.latents, draw.subset);
  const Network<T> f = [&](Var<T> in, T c_noise) { return model.network(in, c_noise, cond); };
  return edm_loss<T>(tape, clean, draw.noise, draw.sigma, cfg.sigma_data, f);
}

template <class T>
Var<T> diffusion_training_loss(Tape<T>& tape, const DiffusionModel<T>& model, const DiffusionSample<T>& sample,
                               std::mt19937_64& rng) {
  const NoiseDraw<T> draw = draw_noise<T>(model.config(), static_cast<int>(sample.frames.size()), rng);
  return diffusion_loss(tape, model, sample, draw);
}

template <class T>
double diffusion_training_step(DiffusionModel<T>& model, nn::Adam<T>& optimizer,
                               const std::vector<DiffusionSample<T>>& batch, double lr, std::mt19937_64& rng) {
  if (batch.empty()) throw std::invalid_argument("diffusion_training_step: empty batch");
  const T inv = static_cast<T>(1.0 / static_cast<double>(batch.size()));
  double total = 0.0;
  for (const DiffusionSample<T>& s : batch) {
    Tape<T> tape;
    const Var<T> loss = diffusion_training_loss(tape, model, s, rng);
    const double value = static_cast<double>(loss.value()(0, 0));
    if (!std::isfinite(value)) throw NumericError("diffusion training produced a non-finite loss");
    tape.backward(loss, Matrix<T>::Constant(1, 1, inv));
    total += value;
  }
  optimizer.step(lr);
  return total / static_cast<double>(batch.size());
}

template <class T>
Matrix<T> sample_latents(const DiffusionModel<T>& model, const vae::GeometryInput<T>& geometry,
                         const std::vector<const vae::ImageInput<T>*>& frames, int steps, uint64_t seed) {
  if (steps < 2) throw std::invalid_argument("sample_latents: need at least 2 steps");
  const DiffusionConfig& cfg = model.config();
  Tape<T> cond_tape(false);
  const Conditioning<T> cond = model.condition(cond_tape, geometry, frames);
  const Matrix<T> geometry_tokens = cond.geometry.value(), frame_tokens = cond.frames.value();
  const Denoiser d = [&](const Matrix<double>& x, double sigma) {
    Tape<T> tape(false);
    Conditioning<T> local{tape.constant(geometry_tokens), tape.constant(frame_tokens), cond.frame_count};
    return model.denoise(tape.constant(x.template cast<T>()), sigma, local).value().template cast<double>().eval();
  };
  const Eigen::Index rows = static_cast<Eigen::Index>(frames.size()) * cfg.latents;
  const Matrix<double> x = heun_sample(d, rows, cfg.latent_channels,
                                       karras_schedule(steps, cfg.sigma_min, cfg.sigma_max, cfg.rho), seed);
  return (x / cfg.latent_scale).template cast<T>();
}

#define MESHMOTION_INSTANTIATE(T)                                                                              \
  template NoiseDraw<T> draw_noise<T>(const DiffusionConfig&, int, std::mt19937_64&);                         \
  template Matrix<T> select_frames<T>(const Matrix<T>&, int, const std::vector<int>&);                        \
  template Var<T> diffusion_loss<T>(Tape<T>&, const DiffusionModel<T>&, const DiffusionSample<T>&,            \
                                    const NoiseDraw<T>&);                                                     \
  template Var<T> diffusion_training_loss<T>(Tape<T>&, const DiffusionModel<T>&, const DiffusionSample<T>&,   \
                                             std::mt19937_64&);                                               \
  template double diffusion_training_step<T>(DiffusionModel<T>&, nn::Adam<T>&,                                \
                                             const std::vector<DiffusionSample<T>>&, double, std::mt19937_64&); \
  template Matrix<T> sample_latents<T>(const DiffusionModel<T>&, const vae::GeometryInput<T>&,                \
                                       const std::vector<const vae::ImageInput<T>*>&, int, uint64_t);
MESHMOTION_INSTANTIATE(float)
MESHMOTION_INSTANTIATE(double)
#undef MESHMOTION_INSTANTIATE

}  // namespace meshmotion::diffusion
