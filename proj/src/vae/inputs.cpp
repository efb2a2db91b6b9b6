#include "meshmotion/vae/inputs.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "meshmotion/geom/embedding.hpp"
#include "meshmotion/geom/sampling.hpp"

namespace meshmotion::vae {

template <class T>
GeometryInput<T> make_geometry_input(const geom::Points& points, int latents) {
  if (latents < 1 || points.rows() < latents)
    throw std::invalid_argument("geometry input: need at least as many points as latents");
  geom::PointCloud(points).validate();
  GeometryInput<T> g;
  g.points = points;
  g.features = geom::fourier_features(points).cast<T>();
  g.anchors = geom::farthest_point_sample(points, latents, 0);
  return g;
}

template <class T>
ImageInput<T> make_image_input(const toydata::MultiViewFrame& frame, int patch) {
  std::vector<int> all(frame.images.size());
  std::iota(all.begin(), all.end(), 0);
  return make_image_input<T>(frame, patch, all);
}

template <class T>
ImageInput<T> make_image_input(const toydata::MultiViewFrame& frame, int patch, const std::vector<int>& views) {
  frame.validate();
  if (patch < 1) throw std::invalid_argument("image input: patch must be positive");
  if (views.empty()) throw std::invalid_argument("image input: no views selected");
  const int W = frame.images[static_cast<size_t>(views[0])].width;
  const int H = frame.images[static_cast<size_t>(views[0])].height;
  if (W % patch != 0 || H % patch != 0) throw std::invalid_argument("image input: size not divisible by patch");
  ImageInput<T> in;
  in.views = static_cast<int>(views.size());
  in.grid_h = H / patch;
  in.grid_w = W / patch;
  in.patch = patch;
  const int per_view = in.grid_h * in.grid_w;
  in.patches.resize(static_cast<Eigen::Index>(in.views) * per_view, patch * patch * kImageChannels);
  for (int vi = 0; vi < in.views; ++vi) {
    const int v = views[static_cast<size_t>(vi)];
    if (v < 0 || v >= static_cast<int>(frame.images.size())) throw std::invalid_argument("image input: bad view index");
    const toydata::Image& img = frame.images[static_cast<size_t>(v)];
    if (img.width != W || img.height != H) throw std::invalid_argument("image input: views differ in size");
    const geom::RaySheet rays = geom::plucker_embed(frame.cameras[static_cast<size_t>(v)]);
    for (int gy = 0; gy < in.grid_h; ++gy)
      for (int gx = 0; gx < in.grid_w; ++gx) {
        const Eigen::Index row = static_cast<Eigen::Index>(vi) * per_view + gy * in.grid_w + gx;
        int col = 0;
        for (int py = 0; py < patch; ++py)
          for (int px = 0; px < patch; ++px) {
            const int y = gy * patch + py, x = gx * patch + px;
            const Eigen::Index pix = static_cast<Eigen::Index>(y) * W + x;
            for (int c = 0; c < 3; ++c) in.patches(row, col++) = static_cast<T>(1.0 - img.at(y, x, c));
            for (int c = 0; c < 3; ++c) in.patches(row, col++) = static_cast<T>(rays.direction(pix, c));
            for (int c = 0; c < 3; ++c) in.patches(row, col++) = static_cast<T>(rays.moment(pix, c));
          }
      }
  }
  return in;
}

template <class T>
nn::Matrix<T> sincos_2d(int rows, int cols, int dim) {
  if (dim % 4 != 0) throw std::invalid_argument("sincos_2d: dim must be divisible by 4");
  const int quarter = dim / 4;
  nn::Matrix<T> out(static_cast<Eigen::Index>(rows) * cols, dim);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const Eigen::Index i = static_cast<Eigen::Index>(r) * cols + c;
      for (int k = 0; k < quarter; ++k) {
        const double omega = 1.0 / std::pow(10000.0, static_cast<double>(k) / quarter);
        out(i, k) = static_cast<T>(std::sin(r * omega));
        out(i, quarter + k) = static_cast<T>(std::cos(r * omega));
        out(i, 2 * quarter + k) = static_cast<T>(std::sin(c * omega));
        out(i, 3 * quarter + k) = static_cast<T>(std::cos(c * omega));
      }
    }
  return out;
}

#define MESHMOTION_INSTANTIATE_INPUTS(T)                                                           \
  template GeometryInput<T> make_geometry_input<T>(const geom::Points&, int);                      \
  template ImageInput<T> make_image_input<T>(const toydata::MultiViewFrame&, int);                 \
  template ImageInput<T> make_image_input<T>(const toydata::MultiViewFrame&, int, const std::vector<int>&); \
  template nn::Matrix<T> sincos_2d<T>(int, int, int);

MESHMOTION_INSTANTIATE_INPUTS(float)
MESHMOTION_INSTANTIATE_INPUTS(double)

}  // namespace meshmotion::vae
