#include "meshmotion/geom/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace meshmotion::geom {

namespace {

double mean_nearest(const Points& from, const Points& to) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < from.rows(); ++i) {
    const Eigen::RowVector3d p = from.row(i);
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < to.rows(); ++j) {
      const double d2 = (to.row(j) - p).squaredNorm();
      if (d2 < best) best = d2;
    }
    total += std::sqrt(best);
  }
  return total / static_cast<double>(from.rows());
}

}  // namespace

double chamfer_distance(const Points& a, const Points& b) {
  if (a.rows() == 0 || b.rows() == 0) throw std::invalid_argument("chamfer_distance: empty cloud");
  return 0.5 * (mean_nearest(a, b) + mean_nearest(b, a));
}

}  // namespace meshmotion::geom
