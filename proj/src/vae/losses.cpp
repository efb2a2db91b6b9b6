#include "meshmotion/vae/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "meshmotion/nn/ops.hpp"

namespace meshmotion::vae {

LossWithGrad deformation_loss(const MatrixXdR& pred, const MatrixXdR& gt, double lambda, double mse_weight) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols())
    throw std::invalid_argument("deformation_loss: shape mismatch");
  if (pred.rows() == 0) throw std::invalid_argument("deformation_loss: empty input");
  const double n = static_cast<double>(pred.rows());
  const double elems = static_cast<double>(pred.size());
  const MatrixXdR r = pred - gt;
  LossWithGrad out;
  out.grad = r * (2.0 * mse_weight / elems);
  double mse = r.squaredNorm() / elems;
  double dis = 0.0;
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    const double d = r.row(i).norm();
    dis += d;
    if (d > 0.0) out.grad.row(i) += r.row(i) * (lambda / (n * d));
  }
  out.value = mse_weight * mse + lambda * dis / n;
  return out;
}

KlLoss kl_loss(const MatrixXdR& mu, const MatrixXdR& sigma) {
  if (mu.rows() != sigma.rows() || mu.cols() != sigma.cols())
    throw std::invalid_argument("kl_loss: shape mismatch");
  if (mu.size() == 0) throw std::invalid_argument("kl_loss: empty input");
  if (!(sigma.array() > 0.0).all()) throw std::invalid_argument("kl_loss: sigma must be positive");
  const double n = static_cast<double>(mu.size());
  KlLoss out;
  const auto s2 = sigma.array().square();
  out.value = 0.5 * (mu.array().square() + s2 - s2.log()).sum() / n;
  out.grad_mu = mu / n;
  out.grad_sigma = ((sigma.array() - sigma.array().inverse()) / n).matrix();
  // d/dlogvar of ½(σ² − logvar) with σ² = exp(logvar).
  out.grad_logvar = (0.5 * (s2 - 1.0) / n).matrix();
  return out;
}

template <class T>
nn::Var<T> deformation_loss(nn::Var<T> pred, const nn::Matrix<T>& gt, double lambda, double mse_weight) {
  const auto r = deformation_loss(pred.value().template cast<double>(), gt.template cast<double>(), lambda, mse_weight);
  return nn::scalar_node<T>(*pred.tape, static_cast<T>(r.value), {{pred, r.grad.template cast<T>()}});
}

template <class T>
nn::Var<T> kl_loss(nn::Var<T> mu, nn::Var<T> logvar) {
  const MatrixXdR lv = logvar.value().template cast<double>();
  const MatrixXdR sigma = (0.5 * lv.array()).exp().matrix();
  const auto r = kl_loss(mu.value().template cast<double>(), sigma);
  return nn::scalar_node<T>(*mu.tape, static_cast<T>(r.value),
                            {{mu, r.grad_mu.template cast<T>()}, {logvar, r.grad_logvar.template cast<T>()}});
}

template nn::Var<float> deformation_loss(nn::Var<float>, const nn::Matrix<float>&, double, double);
template nn::Var<double> deformation_loss(nn::Var<double>, const nn::Matrix<double>&, double, double);
template nn::Var<float> kl_loss(nn::Var<float>, nn::Var<float>);
template nn::Var<double> kl_loss(nn::Var<double>, nn::Var<double>);

}  // namespace meshmotion::vae
