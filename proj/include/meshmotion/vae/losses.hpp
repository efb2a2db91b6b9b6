#pragma once

#include <Eigen/Core>

#include "meshmotion/nn/tape.hpp"

namespace meshmotion::vae {

using MatrixXdR = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct LossWithGrad {
  double value = 0.0;
  MatrixXdR grad;  // d value / d prediction
};

/// mse_weight · mean over points and coordinates of squared error
/// + lambda · mean over points of Euclidean distance. At a zero residual the
/// distance term uses the zero subgradient.
LossWithGrad deformation_loss(const MatrixXdR& pred, const MatrixXdR& gt, double lambda, double mse_weight = 1.0);

struct KlLoss {
  double value = 0.0;
  MatrixXdR grad_mu;
  MatrixXdR grad_sigma;
  MatrixXdR grad_logvar;  // through sigma = exp(logvar / 2)
};

/// Mean over elements of ½(μ² + σ² − log σ²). Requires σ > 0.
KlLoss kl_loss(const MatrixXdR& mu, const MatrixXdR& sigma);

/// Tape versions: 1×1 nodes carrying the analytic gradients above.
template <class T>
nn::Var<T> deformation_loss(nn::Var<T> pred, const nn::Matrix<T>& gt, double lambda, double mse_weight);

template <class T>
nn::Var<T> kl_loss(nn::Var<T> mu, nn::Var<T> logvar);

}  // namespace meshmotion::vae
