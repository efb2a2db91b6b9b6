#pragma once

#include <vector>

#include "meshmotion/geom/types.hpp"
#include "meshmotion/nn/tape.hpp"
#include "meshmotion/toydata/render.hpp"

namespace meshmotion::vae {

// Per pixel: inverted color (background maps to 0), ray direction, ray moment.
inline constexpr int kImageChannels = 9;

/// Precomputed geometry conditioning: Fourier features of all N points and
/// the FPS anchor subset used as latent queries.
template <class T>
struct GeometryInput {
  geom::Points points;      // N×3
  nn::Matrix<T> features;   // N×F Fourier features
  std::vector<int> anchors; // M indices into points
};

template <class T>
GeometryInput<T> make_geometry_input(const geom::Points& points, int latents);

/// Patchified 9-channel views: rows ordered (view, patch row, patch column),
/// columns ordered (pixel row, pixel column, channel) within a patch.
template <class T>
struct ImageInput {
  nn::Matrix<T> patches;
  int views = 0;
  int grid_h = 0;
  int grid_w = 0;
  int patch = 0;

  int tokens_per_view() const { return grid_h * grid_w; }
};

/// Concatenates each view's RGB with its camera's Plücker rays.
template <class T>
ImageInput<T> make_image_input(const toydata::MultiViewFrame& frame, int patch);

/// Same as above for the listed view indices only.
template <class T>
ImageInput<T> make_image_input(const toydata::MultiViewFrame& frame, int patch, const std::vector<int>& views);

/// Fixed 2-D sine/cosine position table, (rows·cols) × dim; dim % 4 == 0.
template <class T>
nn::Matrix<T> sincos_2d(int rows, int cols, int dim);

template <class T>
nn::Matrix<T> to_matrix(const geom::Points& p) {
  return p.cast<T>();
}

}  // namespace meshmotion::vae
