#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "meshmotion/nn/tape.hpp"

namespace meshmotion::nn {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  double clip_norm = 1.0;  // <= 0 disables global-norm clipping
};

/// Cosine annealing from `base` to `floor` over `total` steps, with an optional linear warmup.
inline double cosine_lr(double base, double floor, long step, long total, long warmup = 0) {
  if (total <= 0) return base;
  if (warmup > 0 && step < warmup) return base * static_cast<double>(step + 1) / static_cast<double>(warmup);
  const double progress = std::min(1.0, static_cast<double>(step) / static_cast<double>(total));
  return floor + 0.5 * (base - floor) * (1.0 + std::cos(std::numbers::pi * progress));
}

template <class T>
class Adam {
 public:
  Adam(ParameterStore<T>& store, AdamOptions options = {}) : store_(&store), opt_(options) {
    for (const auto& p : store.params()) {
      m_.push_back(Matrix<T>::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix<T>::Zero(p->value.rows(), p->value.cols()));
    }
  }

  /// Applies one update from the accumulated gradients, then zeroes them.
  /// Returns the pre-clip global gradient norm.
  double step(double lr) {
    const auto& params = store_->params();
    double sq = 0.0;
    for (const auto& p : params) sq += static_cast<double>(p->grad.squaredNorm());
    const double norm = std::sqrt(sq);
    const double clip = (opt_.clip_norm > 0.0 && norm > opt_.clip_norm) ? opt_.clip_norm / norm : 1.0;

    ++t_;
    const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    const T b1 = static_cast<T>(opt_.beta1), b2 = static_cast<T>(opt_.beta2);
    const T step_size = static_cast<T>(lr / bc1);
    const T inv_bc2 = static_cast<T>(1.0 / bc2);
    const T eps = static_cast<T>(opt_.eps);
    for (size_t i = 0; i < params.size(); ++i) {
      Parameter<T>& p = *params[i];
      auto g = (p.grad.array() * static_cast<T>(clip));
      m_[i].array() = b1 * m_[i].array() + (T(1) - b1) * g;
      v_[i].array() = b2 * v_[i].array() + (T(1) - b2) * g.square();
      if (opt_.weight_decay > 0.0) p.value *= static_cast<T>(1.0 - lr * opt_.weight_decay);
      p.value.array() -= step_size * m_[i].array() / ((v_[i].array() * inv_bc2).sqrt() + eps);
      p.grad.setZero();
    }
    return norm;
  }

  long steps() const { return t_; }

 private:
  ParameterStore<T>* store_;
  AdamOptions opt_;
  std::vector<Matrix<T>> m_, v_;
  long t_ = 0;
};

}  // namespace meshmotion::nn
