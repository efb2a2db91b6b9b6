#include "meshmotion/vae/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "meshmotion/errors.hpp"
#include "meshmotion/vae/losses.hpp"

namespace meshmotion::vae {

using nn::Matrix;
using nn::Tape;
using nn::Var;

namespace {

template <class T>
void check_sample(const VaeSample<T>& s) {
  if (!s.geometry || !s.images || !s.target) throw std::invalid_argument("vae sample: missing field");
  if (s.target->rows() != s.geometry->points.rows())
    throw std::invalid_argument("vae sample: target and geometry point counts differ");
}

}  // namespace

template <class T>
VaeStepLosses vae_training_step(VaeModel<T>& model, nn::Adam<T>& optimizer, const std::vector<VaeSample<T>>& batch,
                                double lr, std::mt19937_64& rng) {
  if (batch.empty()) throw std::invalid_argument("vae_training_step: empty batch");
  const VaeConfig& cfg = model.config();
  std::normal_distribution<double> normal(0.0, 1.0);
  const T inv_batch = static_cast<T>(1.0 / static_cast<double>(batch.size()));
  VaeStepLosses sum;
  for (const VaeSample<T>& s : batch) {
    check_sample(s);
    const auto n = static_cast<int>(s.geometry->points.rows());
    std::vector<int> idx(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    if (cfg.train_queries > 0 && cfg.train_queries < n) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(static_cast<size_t>(cfg.train_queries));
      std::sort(idx.begin(), idx.end());
    }
    geom::Points queries(static_cast<Eigen::Index>(idx.size()), 3);
    Matrix<T> gt(static_cast<Eigen::Index>(idx.size()), 3);
    for (size_t i = 0; i < idx.size(); ++i) {
      queries.row(static_cast<Eigen::Index>(i)) = s.geometry->points.row(idx[i]);
      gt.row(static_cast<Eigen::Index>(i)) = s.target->row(idx[i]).template cast<T>();
    }
    Matrix<T> eps(cfg.latents, cfg.latent_channels);
    for (Eigen::Index i = 0; i < eps.size(); ++i) eps.data()[i] = static_cast<T>(normal(rng));

    Tape<T> tape;
    const Var<T> f = model.encode_motion(tape, *s.geometry, *s.images);
    const KlOutput<T> k = model.kl_compress(f, &eps);
    const Var<T> pred = model.decode_queries(k.z, queries);
    const Var<T> l_def = deformation_loss(pred, gt, cfg.lambda, cfg.mse_weight);
    const Var<T> l_kl = kl_loss(k.mu, k.logvar);
    const Var<T> total = nn::add(l_def, nn::scale(l_kl, static_cast<T>(cfg.kl_weight)));
    const double d = static_cast<double>(l_def.value()(0, 0)), r = static_cast<double>(l_kl.value()(0, 0));
    if (!std::isfinite(d) || !std::isfinite(r)) {
      model.store().zero_grad();
      throw NumericError("vae_training_step: non-finite loss (deformation " + std::to_string(d) + ", kl " +
                         std::to_string(r) + ")");
    }
    tape.backward(total, Matrix<T>::Constant(1, 1, inv_batch));
    sum.deformation += d;
    sum.kl += r;
    sum.total += static_cast<double>(total.value()(0, 0));
  }
  optimizer.step(lr);
  const double b = static_cast<double>(batch.size());
  return {sum.deformation / b, sum.kl / b, sum.total / b};
}

template <class T>
VaeStepLosses vae_evaluate(const VaeModel<T>& model, const VaeSample<T>& s) {
  check_sample(s);
  const VaeConfig& cfg = model.config();
  Tape<T> tape(false);
  const Var<T> f = model.encode_motion(tape, *s.geometry, *s.images);
  const KlOutput<T> k = model.kl_compress(f, nullptr);
  const Var<T> pred = model.decode_queries(k.z, s.geometry->points);
  const Matrix<T> gt = s.target->template cast<T>();
  const double d = static_cast<double>(deformation_loss(pred, gt, cfg.lambda, cfg.mse_weight).value()(0, 0));
  const double r = static_cast<double>(kl_loss(k.mu, k.logvar).value()(0, 0));
  return {d, r, d + cfg.kl_weight * r};
}

template VaeStepLosses vae_training_step(VaeModel<float>&, nn::Adam<float>&, const std::vector<VaeSample<float>>&, double,
                                         std::mt19937_64&);
template VaeStepLosses vae_training_step(VaeModel<double>&, nn::Adam<double>&, const std::vector<VaeSample<double>>&,
                                         double, std::mt19937_64&);
template VaeStepLosses vae_evaluate(const VaeModel<float>&, const VaeSample<float>&);
template VaeStepLosses vae_evaluate(const VaeModel<double>&, const VaeSample<double>&);

}  // namespace meshmotion::vae
