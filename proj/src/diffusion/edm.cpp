#include "meshmotion/diffusion/edm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace meshmotion::diffusion {

NoiseLevel edm_precondition(double sigma, double sigma_data) {
  if (!(sigma > 0.0)) throw std::invalid_argument("edm_precondition: sigma must be positive");
  if (!(sigma_data > 0.0)) throw std::invalid_argument("edm_precondition: sigma_data must be positive");
  const double s2 = sigma * sigma, d2 = sigma_data * sigma_data;
  const double root = std::sqrt(s2 + d2);
  NoiseLevel n;
  n.sigma = sigma;
  n.c_skip = d2 / (s2 + d2);
  n.c_out = sigma * sigma_data / root;
  n.c_in = 1.0 / root;
  n.c_noise = 0.25 * std::log(sigma);
  return n;
}

double edm_weight(double sigma, double sigma_data) {
  if (!(sigma > 0.0)) throw std::invalid_argument("edm_weight: sigma must be positive");
  const double sd = sigma * sigma_data;
  return (sigma * sigma + sigma_data * sigma_data) / (sd * sd);
}

std::vector<double> karras_schedule(int steps, double sigma_min, double sigma_max, double rho) {
  if (steps < 2) throw std::invalid_argument("karras_schedule: need at least 2 steps");
  if (!(sigma_min > 0.0 && sigma_min < sigma_max)) throw std::invalid_argument("karras_schedule: need 0 < sigma_min < sigma_max");
  const double lo = std::pow(sigma_min, 1.0 / rho), hi = std::pow(sigma_max, 1.0 / rho);
  std::vector<double> s(static_cast<size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(steps - 1);
    s[static_cast<size_t>(i)] = std::pow(hi + f * (lo - hi), rho);
  }
  s.front() = sigma_max;
  s.back() = sigma_min;
  return s;
}

int subset_size(int frames, int divisor) {
  if (frames < 1 || divisor < 1) throw std::invalid_argument("subset_size: counts must be positive");
  return std::max(1, (frames + divisor - 1) / divisor);
}

std::vector<int> sample_subset(int frames, int count, std::mt19937_64& rng) {
  if (count < 1 || count > frames) throw std::invalid_argument("sample_subset: bad subset size");
  std::vector<int> all(static_cast<size_t>(frames));
  std::iota(all.begin(), all.end(), 0);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(static_cast<size_t>(count));
  std::sort(all.begin(), all.end());
  return all;
}

std::vector<int> nearest_frame_pairing(int video_frames, int slots) {
  if (video_frames < 1 || slots < 1) throw std::invalid_argument("nearest_frame_pairing: counts must be positive");
  std::vector<int> pair(static_cast<size_t>(slots), 0);
  if (slots == 1) return pair;
  for (int s = 0; s < slots; ++s) {
    const double t = static_cast<double>(s) * (video_frames - 1) / static_cast<double>(slots - 1);
    pair[static_cast<size_t>(s)] = std::clamp(static_cast<int>(std::lround(t)), 0, video_frames - 1);
  }
  return pair;
}

nn::Matrix<double> heun_sample(const Denoiser& denoise, Eigen::Index rows, Eigen::Index cols,
                               const std::vector<double>& sigmas, uint64_t seed) {
  if (sigmas.size() < 2) throw std::invalid_argument("heun_sample: need at least 2 noise levels");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  nn::Matrix<double> x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = sigmas.front() * normal(rng);

  std::vector<double> levels = sigmas;
  levels.push_back(0.0);
  for (size_t i = 0; i + 1 < levels.size(); ++i) {
    const double s = levels[i], next = levels[i + 1];
    const nn::Matrix<double> d = (x - denoise(x, s)) / s;
    nn::Matrix<double> x_next = x + (next - s) * d;
    if (next > 0.0) {
      const nn::Matrix<double> d2 = (x_next - denoise(x_next, next)) / next;
      x_next = x + (next - s) * 0.5 * (d + d2);
    }
    x = std::move(x_next);
  }
  return x;
}

}  // namespace meshmotion::diffusion
