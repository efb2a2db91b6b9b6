#pragma once

#include <functional>
#include <random>
#include <vector>

#include "meshmotion/nn/ops.hpp"
#include "meshmotion/nn/tape.hpp"

namespace meshmotion::diffusion {

struct NoiseLevel {
  double sigma = 0.0;
  double c_skip = 0.0;
  double c_out = 0.0;
  double c_in = 0.0;
  double c_noise = 0.0;
};

/// EDM preconditioners for noise level `sigma`; throws if sigma <= 0.
NoiseLevel edm_precondition(double sigma, double sigma_data);

/// Loss weight (σ² + σ_data²) / (σ·σ_data)².
double edm_weight(double sigma, double sigma_data);

/// `steps` noise levels from sigma_max down to sigma_min, spaced uniformly in σ^(1/ρ).
std::vector<double> karras_schedule(int steps, double sigma_min, double sigma_max, double rho);

/// ⌈frames / divisor⌉, at least 1.
int subset_size(int frames, int divisor);

/// `count` distinct indices from [0, frames) in ascending order.
std::vector<int> sample_subset(int frames, int count, std::mt19937_64& rng);

/// For each of `slots` latent positions, the index of the video frame closest in
/// normalized time. Equal counts give the identity.
std::vector<int> nearest_frame_pairing(int video_frames, int slots);

/// Raw network F(c_in·x, c_noise) on the tape.
template <class T>
using Network = std::function<nn::Var<T>(nn::Var<T> scaled_input, T c_noise)>;

/// D(x, σ) = c_skip·x + c_out·F(c_in·x, c_noise).
template <class T>
nn::Var<T> edm_denoise(nn::Var<T> x, double sigma, double sigma_data, const Network<T>& network) {
  const NoiseLevel n = edm_precondition(sigma, sigma_data);
  const nn::Var<T> f = network(nn::scale(x, static_cast<T>(n.c_in)), static_cast<T>(n.c_noise));
  return nn::add(nn::scale(x, static_cast<T>(n.c_skip)), nn::scale(f, static_cast<T>(n.c_out)));
}

/// λ(σ) · mean((D(clean + noise, σ) − clean)²) with `noise` already scaled by σ.
template <class T>
nn::Var<T> edm_loss(nn::Tape<T>& tape, const nn::Matrix<T>& clean, const nn::Matrix<T>& noise, double sigma,
                    double sigma_data, const Network<T>& network) {
  if (clean.rows() != noise.rows() || clean.cols() != noise.cols())
    throw std::invalid_argument("edm_loss: noise shape differs from the clean latents");
  const nn::Matrix<T> noisy = clean + noise;
  const nn::Var<T> d = edm_denoise(tape.constant(noisy), sigma, sigma_data, network);
  const nn::Var<T> r = nn::sub(d, tape.constant(clean));
  return nn::scale(nn::mean(nn::mul(r, r)), static_cast<T>(edm_weight(sigma, sigma_data)));
}

using Denoiser = std::function<nn::Matrix<double>(const nn::Matrix<double>& x, double sigma)>;

/// Deterministic second-order sampler. Starts from sigma[0]·n with n ~ N(0, I)
/// drawn from `seed`, takes Heun steps between consecutive levels and a final
/// Euler step from the last level to zero.
nn::Matrix<double> heun_sample(const Denoiser& denoise, Eigen::Index rows, Eigen::Index cols,
                               const std::vector<double>& sigmas, uint64_t seed);

}  // namespace meshmotion::diffusion
