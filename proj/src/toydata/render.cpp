#include "meshmotion/toydata/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "meshmotion/common/kv.hpp"
#include "meshmotion/errors.hpp"

namespace meshmotion::toydata {

using geom::Camera;
using geom::Projection;

void MultiViewFrame::validate() const {
  if (images.empty()) throw std::invalid_argument("MultiViewFrame: no views");
  if (images.size() != cameras.size())
    throw std::invalid_argument("MultiViewFrame: image/camera count mismatch");
  for (size_t i = 0; i < images.size(); ++i) {
    if (images[i].width != cameras[i].width || images[i].height != cameras[i].height)
      throw std::invalid_argument("MultiViewFrame: image size differs from its camera");
  }
}

std::vector<Camera> default_cameras(int width, int height) {
  const double d = kDefaultCameraDistance;
  const Eigen::Vector3d up(0, 1, 0);
  std::vector<Camera> cams;
  for (const Eigen::Vector3d& c : {Eigen::Vector3d(0, 0, d), Eigen::Vector3d(d, 0, 0),
                                   Eigen::Vector3d(0, 0, -d), Eigen::Vector3d(-d, 0, 0)}) {
    Camera cam = Camera::look_at(c, Eigen::Vector3d::Zero(), up, Projection::Orthographic, width, height);
    cam.half_extent = kDefaultHalfExtent;
    cams.push_back(cam);
  }
  return cams;
}

namespace {

std::string vec_text(const Eigen::Vector3d& v) {
  return kv::format_double(v.x()) + " " + kv::format_double(v.y()) + " " + kv::format_double(v.z());
}

Eigen::Vector3d parse_vec(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::string a, b, c, extra;
  if (!(in >> a >> b >> c) || (in >> extra)) throw ConfigError("expected three numbers for " + key);
  return {kv::parse_double(a, key), kv::parse_double(b, key), kv::parse_double(c, key)};
}

struct ScreenVertex {
  double x, y, depth;
};

}  // namespace

void write_cameras(const std::filesystem::path& path, const std::vector<Camera>& cameras) {
  kv::Document doc;
  doc.set("count", static_cast<long>(cameras.size()));
  for (size_t i = 0; i < cameras.size(); ++i) {
    const Camera& c = cameras[i];
    const std::string p = "view" + std::to_string(i) + ".";
    doc.set(p + "center", vec_text(c.center));
    doc.set(p + "right", vec_text(c.right()));
    doc.set(p + "up", vec_text(c.up()));
    doc.set(p + "forward", vec_text(c.forward()));
    doc.set(p + "projection", std::string(c.projection == Projection::Orthographic ? "orthographic" : "pinhole"));
    doc.set(p + "half_extent", c.half_extent);
    doc.set(p + "focal_px", c.focal_px);
    doc.set(p + "width", static_cast<long>(c.width));
    doc.set(p + "height", static_cast<long>(c.height));
  }
  doc.write_file(path);
}

std::vector<Camera> read_cameras(const std::filesystem::path& path) {
  const kv::Document doc = kv::Document::read_file(path);
  const long count = doc.require_long("count");
  if (count < 1) throw ConfigError(path.string() + ": camera count must be positive");
  std::vector<Camera> cams;
  for (long i = 0; i < count; ++i) {
    const std::string p = "view" + std::to_string(i) + ".";
    Camera c;
    c.center = parse_vec(doc.require(p + "center"), p + "center");
    c.orientation.row(0) = parse_vec(doc.require(p + "right"), p + "right").transpose();
    c.orientation.row(1) = parse_vec(doc.require(p + "up"), p + "up").transpose();
    c.orientation.row(2) = parse_vec(doc.require(p + "forward"), p + "forward").transpose();
    const std::string proj = doc.require(p + "projection");
    if (proj == "orthographic") c.projection = Projection::Orthographic;
    else if (proj == "pinhole") c.projection = Projection::Pinhole;
    else throw ConfigError(path.string() + ": unknown projection '" + proj + "'");
    c.half_extent = doc.require_double(p + "half_extent");
    c.focal_px = doc.require_double(p + "focal_px");
    c.width = static_cast<int>(doc.require_long(p + "width"));
    c.height = static_cast<int>(doc.require_long(p + "height"));
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
    cams.push_back(c);
  }
  return cams;
}

Image rasterize(const geom::Points& vertices, const geom::Faces& faces, const geom::Points& colors,
                const Camera& cam) {
  cam.validate();
  if (colors.rows() != vertices.rows()) throw std::invalid_argument("rasterize: one color per vertex required");
  constexpr double kNear = 1e-3;
  const Eigen::Vector3d light = Eigen::Vector3d(0.3, 0.8, 0.5).normalized();
  const int W = cam.width, H = cam.height;
  const double aspect = static_cast<double>(W) / H;

  Image img(W, H, 1.0f);
  std::vector<double> zbuf(static_cast<size_t>(W) * H, std::numeric_limits<double>::infinity());

  std::vector<ScreenVertex> sv(static_cast<size_t>(vertices.rows()));
  for (Eigen::Index i = 0; i < vertices.rows(); ++i) {
    const Eigen::Vector3d d = vertices.row(i).transpose() - cam.center;
    const double x = d.dot(cam.right()), y = d.dot(cam.up()), z = d.dot(cam.forward());
    ScreenVertex s{};
    s.depth = z;
    if (cam.projection == Projection::Orthographic) {
      const double nx = x / (cam.half_extent * aspect), ny = y / cam.half_extent;
      s.x = (nx + 1.0) * 0.5 * W;
      s.y = (1.0 - ny) * 0.5 * H;
    } else {
      const double zz = std::max(z, kNear);
      s.x = cam.focal_px * x / zz + W * 0.5;
      s.y = H * 0.5 - cam.focal_px * y / zz;
    }
    sv[static_cast<size_t>(i)] = s;
  }

  for (Eigen::Index f = 0; f < faces.rows(); ++f) {
    const int ia = faces(f, 0), ib = faces(f, 1), ic = faces(f, 2);
    const ScreenVertex &a = sv[static_cast<size_t>(ia)], &b = sv[static_cast<size_t>(ib)],
                       &c = sv[static_cast<size_t>(ic)];
    if (a.depth < kNear || b.depth < kNear || c.depth < kNear) continue;
    const double area = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    if (std::abs(area) < 1e-12) continue;

    const Eigen::Vector3d pa = vertices.row(ia).transpose();
    Eigen::Vector3d n = (vertices.row(ib).transpose() - pa).cross(vertices.row(ic).transpose() - pa);
    const double nn = n.norm();
    if (nn == 0.0) continue;
    n /= nn;
    const double shade = 0.3 + 0.7 * std::abs(n.dot(light));
    const Eigen::Vector3d rgb = (colors.row(ia) + colors.row(ib) + colors.row(ic)).transpose() / 3.0 * shade;

    const int u0 = std::max(0, static_cast<int>(std::floor(std::min({a.x, b.x, c.x}))));
    const int u1 = std::min(W - 1, static_cast<int>(std::ceil(std::max({a.x, b.x, c.x}))));
    const int v0 = std::max(0, static_cast<int>(std::floor(std::min({a.y, b.y, c.y}))));
    const int v1 = std::min(H - 1, static_cast<int>(std::ceil(std::max({a.y, b.y, c.y}))));
    for (int v = v0; v <= v1; ++v) {
      const double py = v + 0.5;
      for (int u = u0; u <= u1; ++u) {
        const double px = u + 0.5;
        double w0 = ((b.x - px) * (c.y - py) - (b.y - py) * (c.x - px)) / area;
        double w1 = ((c.x - px) * (a.y - py) - (c.y - py) * (a.x - px)) / area;
        double w2 = 1.0 - w0 - w1;
        if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
        const double depth = w0 * a.depth + w1 * b.depth + w2 * c.depth;
        const size_t idx = static_cast<size_t>(v) * W + u;
        if (depth >= zbuf[idx]) continue;
        zbuf[idx] = depth;
        for (int ch = 0; ch < 3; ++ch) img.at(v, u, ch) = static_cast<float>(std::clamp(rgb[ch], 0.0, 1.0));
      }
    }
  }
  return img;
}

MultiViewFrame render_views(const geom::Points& vertices, const geom::Faces& faces,
                            const geom::Points& colors, const std::vector<Camera>& cameras,
                            double timestamp) {
  if (cameras.empty()) throw std::invalid_argument("render_views: no cameras");
  MultiViewFrame frame;
  frame.timestamp = timestamp;
  frame.cameras = cameras;
  for (const Camera& cam : cameras) frame.images.push_back(rasterize(vertices, faces, colors, cam));
  return frame;
}

}  // namespace meshmotion::toydata
