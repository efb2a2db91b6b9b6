#pragma once

#include <random>
#include <vector>

#include "meshmotion/nn/optim.hpp"
#include "meshmotion/vae/model.hpp"

namespace meshmotion::vae {

/// One (P1, Pt, It) training triple. Pointers are borrowed.
template <class T>
struct VaeSample {
  const GeometryInput<T>* geometry = nullptr;
  const ImageInput<T>* images = nullptr;
  const geom::Points* target = nullptr;  // Pt, row-aligned with geometry->points
};

struct VaeStepLosses {
  double deformation = 0.0;
  double kl = 0.0;
  double total = 0.0;
};

/// Forward/backward over the batch on deformation + kl_weight · KL (batch mean),
/// then one optimizer step. Query subsets and reparameterization noise come from
/// `rng`. Throws NumericError before updating if any loss is non-finite.
template <class T>
VaeStepLosses vae_training_step(VaeModel<T>& model, nn::Adam<T>& optimizer, const std::vector<VaeSample<T>>& batch,
                                double lr, std::mt19937_64& rng);

/// Loss of one sample without updating anything (deterministic latent, all queries).
template <class T>
VaeStepLosses vae_evaluate(const VaeModel<T>& model, const VaeSample<T>& sample);

}  // namespace meshmotion::vae
