#pragma once

#include <random>
#include <vector>

#include "meshmotion/diffusion/model.hpp"
#include "meshmotion/nn/optim.hpp"

namespace meshmotion::diffusion {

/// One training clip: conditioning plus its clean latent sequence.
template <class T>
struct DiffusionSample {
  const vae::GeometryInput<T>* geometry = nullptr;
  std::vector<const vae::ImageInput<T>*> frames;  // one single-view input per timestamp
  const nn::Matrix<T>* latents = nullptr;         // (T·M)×C0 frame-major, already scaled
};

/// Fixed draw of the stochastic parts of the objective.
template <class T>
struct NoiseDraw {
  double sigma = 1.0;
  std::vector<int> subset;  // ascending timestamps
  nn::Matrix<T> noise;      // (T′·M)×C0, already scaled by sigma
};

/// ln σ ~ N(P_mean, P_std²), a sorted subset of ⌈T/divisor⌉ timestamps, ε ~ N(0, σ²I).
/// Throws if the clip has fewer than 3 timestamps.
template <class T>
NoiseDraw<T> draw_noise(const DiffusionConfig& config, int frames, std::mt19937_64& rng);

/// Rows of `latents` for the listed timestamps, frame-major.
template <class T>
nn::Matrix<T> select_frames(const nn::Matrix<T>& latents, int tokens, const std::vector<int>& subset);

/// Weighted denoising loss for a fixed draw.
template <class T>
nn::Var<T> diffusion_loss(nn::Tape<T>& tape, const DiffusionModel<T>& model, const DiffusionSample<T>& sample,
                          const NoiseDraw<T>& draw);

/// Same with a fresh draw from `rng`.
template <class T>
nn::Var<T> diffusion_training_loss(nn::Tape<T>& tape, const DiffusionModel<T>& model,
                                   const DiffusionSample<T>& sample, std::mt19937_64& rng);

/// One optimizer step over the batch; returns the mean loss. Non-finite loss throws NumericError.
template <class T>
double diffusion_training_step(DiffusionModel<T>& model, nn::Adam<T>& optimizer,
                               const std::vector<DiffusionSample<T>>& batch, double lr, std::mt19937_64& rng);

/// Samples all timestamps jointly with the configured schedule; returns raw
/// (unscaled) latents, (T·M)×C0 frame-major. Throws if steps < 2.
template <class T>
nn::Matrix<T> sample_latents(const DiffusionModel<T>& model, const vae::GeometryInput<T>& geometry,
                             const std::vector<const vae::ImageInput<T>*>& frames, int steps, uint64_t seed);

}  // namespace meshmotion::diffusion
