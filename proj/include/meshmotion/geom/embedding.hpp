#pragma once

#include <Eigen/Core>

#include "meshmotion/geom/types.hpp"

namespace meshmotion::geom {

inline constexpr int kFourierOctaves = 8;
inline constexpr int kFourierFeatures = 6 * kFourierOctaves;

/// Sinusoidal features per axis: for k in [0, octaves) the pair
/// sin(π·2^(k-1)·x), cos(π·2^(k-1)·x). Column layout is
/// [axis][octave][sin, cos]. Injective on (-2, 2)^3.
Eigen::MatrixXd fourier_features(const Points& points, int octaves = kFourierOctaves);

/// Fourier features followed by an affine map: `projection` is F×C (F = 6·octaves),
/// `bias` has C entries.
Eigen::MatrixXd positional_embed(const Points& points, const Eigen::MatrixXd& projection,
                                 const Eigen::VectorXd& bias);

/// Ray direction and moment for every pixel center.
RaySheet plucker_embed(const Camera& camera);

}  // namespace meshmotion::geom
