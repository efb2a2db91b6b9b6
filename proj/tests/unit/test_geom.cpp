#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <set>

#include "meshmotion/errors.hpp"
#include "meshmotion/geom/embedding.hpp"
#include "meshmotion/geom/io.hpp"
#include "meshmotion/geom/metrics.hpp"
#include "meshmotion/geom/primitives.hpp"
#include "meshmotion/geom/sampling.hpp"
#include "meshmotion/geom/transform.hpp"

using namespace meshmotion::geom;

namespace {

Points random_points(int n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> uni(lo, hi);
  Points p(n, 3);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < 3; ++k) p(i, k) = uni(rng);
  return p;
}

// Recomputes every candidate's distance to the whole selected set at each step.
std::vector<int> fps_oracle(const Points& p, int m, int seed) {
  std::vector<int> sel{seed};
  while (static_cast<int>(sel.size()) < m) {
    int best = -1;
    double best_d = -1.0;
    for (int i = 0; i < p.rows(); ++i) {
      if (std::find(sel.begin(), sel.end(), i) != sel.end()) continue;
      double d = std::numeric_limits<double>::infinity();
      for (int s : sel) d = std::min(d, (p.row(i) - p.row(s)).squaredNorm());
      if (d > best_d) {
        best_d = d;
        best = i;
      }
    }
    sel.push_back(best);
  }
  return sel;
}

double chamfer_oracle(const Points& a, const Points& b) {
  double ab = 0.0, ba = 0.0;
  for (int i = 0; i < a.rows(); ++i) {
    double best = 1e300;
    for (int j = 0; j < b.rows(); ++j) best = std::min(best, (a.row(i) - b.row(j)).norm());
    ab += best;
  }
  for (int j = 0; j < b.rows(); ++j) {
    double best = 1e300;
    for (int i = 0; i < a.rows(); ++i) best = std::min(best, (a.row(i) - b.row(j)).norm());
    ba += best;
  }
  return 0.5 * (ab / a.rows() + ba / b.rows());
}

double min_nn_spacing(const Points& p) {
  double best = 1e300;
  for (int i = 0; i < p.rows(); ++i)
    for (int j = i + 1; j < p.rows(); ++j) best = std::min(best, (p.row(i) - p.row(j)).norm());
  return best;
}

}  // namespace

TEST_CASE("farthest_point_sample on a line picks the far end") {
  Points p(4, 3);
  p << 0, 0, 0, 1, 0, 0, 2, 0, 0, 3, 0, 0;
  CHECK(farthest_point_sample(p, 2, 0) == std::vector<int>{0, 3});
  CHECK(fps_oracle(p, 2, 0) == std::vector<int>{0, 3});
  CHECK(farthest_point_sample(p, 1, 2) == std::vector<int>{2});

  auto all = farthest_point_sample(p, 4, 1);
  CHECK(all.front() == 1);
  CHECK(std::set<int>(all.begin(), all.end()).size() == 4);
}

TEST_CASE("farthest_point_sample errors") {
  Points p(3, 3);
  p.setZero();
  CHECK_THROWS_AS(farthest_point_sample(p, 4, 0), std::invalid_argument);
  CHECK_THROWS_AS(farthest_point_sample(p, 1, 3), std::invalid_argument);
  CHECK_THROWS_AS(farthest_point_sample(Points(0, 3), 1, 0), std::invalid_argument);
}

TEST_CASE("farthest_point_sample ties go to the lowest index") {
  // Equidistant candidates around the seed.
  Points p(5, 3);
  p << 0, 0, 0, 1, 0, 0, 0, 1, 0, -1, 0, 0, 0, -1, 0;
  auto sel = farthest_point_sample(p, 3, 0);
  CHECK(sel == fps_oracle(p, 3, 0));
  CHECK(sel[1] == 1);
  CHECK(sel[2] == 2);  // all three remaining candidates tie at squared distance 1
}

TEST_CASE("farthest_point_sample matches the exhaustive oracle on small clouds") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 63);
    Points p = random_points(n, rng);
    if (trial % 5 == 0) {
      // Integer lattice coordinates produce exact ties.
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < 3; ++k) p(i, k) = std::round(p(i, k) * 2.0);
    }
    const int m = 1 + static_cast<int>(rng() % n);
    const int seed = static_cast<int>(rng() % n);
    CHECK(farthest_point_sample(p, m, seed) == fps_oracle(p, m, seed));
  }
}

TEST_CASE("sample_surface points lie on the unit cube surface") {
  const TriangleMesh cube = make_box({0.5, 0.5, 0.5}, 2);
  std::mt19937_64 rng(3);
  const PointCloud pc = sample_surface(cube, 300, 200, rng);
  REQUIRE(pc.size() == 500);
  for (int i = 0; i < pc.size(); ++i) {
    const double linf = pc.points.row(i).cwiseAbs().maxCoeff();
    CHECK(std::abs(linf - 0.5) < 1e-6);
  }
}

TEST_CASE("sample_surface on a single triangle stays in its plane") {
  const TriangleMesh tri = make_triangle({0.1, 0.2, 0.3}, {1.0, -0.5, 0.2}, {-0.3, 0.7, 0.9});
  const Eigen::Vector3d a = tri.vertices.row(0), b = tri.vertices.row(1), c = tri.vertices.row(2);
  const Eigen::Vector3d n = (b - a).cross(c - a).normalized();
  std::mt19937_64 rng(11);
  const PointCloud pc = sample_surface(tri, 64, 64, rng);
  for (int i = 0; i < pc.size(); ++i) CHECK(std::abs(n.dot(pc.points.row(i).transpose() - a)) < 1e-12);
}

TEST_CASE("sample_surface rejects zero-area meshes") {
  const TriangleMesh flat = make_triangle({0, 0, 0}, {1, 0, 0}, {2, 0, 0});
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(sample_surface(flat, 10, 10, rng), std::invalid_argument);
  const TriangleMesh tri = make_triangle({0, 0, 0}, {1, 0, 0}, {0, 1, 0});
  CHECK_THROWS_AS(sample_surface(tri, 0, 0, rng), std::invalid_argument);
}

TEST_CASE("sample_surface FPS half is more evenly spread than the random half") {
  const TriangleMesh sphere = make_uv_sphere(1.0, 24, 48);
  std::vector<double> fps_spacing, random_spacing;
  for (int seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(static_cast<uint64_t>(seed));
    const PointCloud pc = sample_surface(sphere, 1024, 1024, rng);
    random_spacing.push_back(min_nn_spacing(pc.points.topRows(1024)));
    fps_spacing.push_back(min_nn_spacing(pc.points.bottomRows(1024)));
  }
  std::sort(fps_spacing.begin(), fps_spacing.end());
  std::sort(random_spacing.begin(), random_spacing.end());
  const double fps_median = 0.5 * (fps_spacing[4] + fps_spacing[5]);
  const double random_median = 0.5 * (random_spacing[4] + random_spacing[5]);
  CHECK(fps_median >= random_median);
}

TEST_CASE("positional_embed shapes, determinism, and sensitivity") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd proj(kFourierFeatures, 128);
  for (int i = 0; i < proj.size(); ++i) proj.data()[i] = gauss(rng) * 0.1;
  Eigen::VectorXd bias = Eigen::VectorXd::Zero(128);

  Points q = random_points(5, rng);
  q.row(3) = q.row(1);
  const Eigen::MatrixXd e = positional_embed(q, proj, bias);
  CHECK(e.rows() == 5);
  CHECK(e.cols() == 128);
  CHECK(e.row(3) == e.row(1));
  CHECK(positional_embed(q, proj, bias) == e);

  Points pair(2, 3);
  pair << 0.2, 0.3, -0.1, 0.3, 0.3, -0.1;
  const Eigen::MatrixXd pe = positional_embed(pair, proj, bias);
  CHECK((pe.row(0) - pe.row(1)).norm() > 0.0);

  CHECK_THROWS_AS(positional_embed(q, Eigen::MatrixXd::Zero(47, 4), Eigen::VectorXd::Zero(4)),
                  std::invalid_argument);
}

TEST_CASE("fourier features are injective on a random sample") {
  std::mt19937_64 rng(9);
  const Points p = random_points(1000, rng);
  const Eigen::MatrixXd f = fourier_features(p);
  double closest = 1e300;
  for (int i = 0; i < 1000; ++i)
    for (int j = i + 1; j < 1000; ++j) closest = std::min(closest, (f.row(i) - f.row(j)).norm());
  CHECK(closest > 1e-9);
}

TEST_CASE("plucker_embed invariants") {
  Camera ortho = Camera::look_at({0, 0, 3}, {0, 0, 0}, {0, 1, 0}, Projection::Orthographic, 16, 16);
  const RaySheet rs = plucker_embed(ortho);
  for (int i = 0; i < rs.direction.rows(); ++i) {
    CHECK((rs.direction.row(i) - Eigen::RowVector3d(0, 0, -1)).norm() < 1e-12);
    CHECK(std::abs(rs.moment.row(i).dot(rs.direction.row(i))) < 1e-12);
  }

  Camera pin = Camera::look_at({0.4, -0.3, 2.5}, {0, 0.1, 0}, {0, 1, 0}, Projection::Pinhole, 12, 10);
  pin.focal_px = 14.0;
  for (const Camera& cam : {ortho, pin}) {
    const RaySheet base = plucker_embed(cam);
    for (int i = 0; i < base.direction.rows(); i += 7) {
      CHECK(std::abs(base.direction.row(i).norm() - 1.0) < 1e-12);
      CHECK(std::abs(base.moment.row(i).dot(base.direction.row(i))) < 1e-12);
      Camera shifted = cam;
      shifted.center += 0.75 * base.direction.row(i).transpose();
      const RaySheet s = plucker_embed(shifted);
      CHECK((s.direction.row(i) - base.direction.row(i)).norm() < 1e-9);
      CHECK((s.moment.row(i) - base.moment.row(i)).norm() < 1e-9);
    }
  }

  Camera bad = ortho;
  bad.width = 4;
  CHECK_THROWS_AS(plucker_embed(bad), std::invalid_argument);
}

TEST_CASE("chamfer_distance definitions") {
  Points a(1, 3), b(1, 3);
  a << 0, 0, 0;
  b << 1, 0, 0;
  CHECK(chamfer_distance(a, b) == doctest::Approx(1.0));
  CHECK(chamfer_distance(a, a) == 0.0);
  CHECK_THROWS_AS(chamfer_distance(a, Points(0, 3)), std::invalid_argument);

  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const Points x = random_points(5, rng), y = random_points(7, rng);
    const double cd = chamfer_distance(x, y);
    CHECK(std::abs(cd - chamfer_oracle(x, y)) < 1e-9);
    CHECK(std::abs(cd - chamfer_distance(y, x)) < 1e-12);
    CHECK(cd >= 0.0);
  }

  // Zero when each cloud is contained in the other, even with duplicates.
  Points dup(3, 3);
  dup << 0, 0, 0, 1, 0, 0, 1, 0, 0;
  Points uniq(2, 3);
  uniq << 1, 0, 0, 0, 0, 0;
  CHECK(chamfer_distance(dup, uniq) == 0.0);
}

TEST_CASE("normalize_to_unit_cube") {
  TriangleMesh centered = make_box({0.9, 0.5, 0.2});
  const auto n1 = normalize_to_unit_cube(centered);
  CHECK(n1.transform.scale == 1.0);
  CHECK(n1.transform.offset.norm() == 0.0);

  TriangleMesh big = make_box({2, 2, 2});
  const auto n2 = normalize_to_unit_cube(big);
  CHECK(n2.transform.scale == doctest::Approx(0.45).epsilon(1e-12));
  CHECK(n2.transform.offset.norm() < 1e-15);

  TriangleMesh shifted = make_uv_sphere(0.3, 6, 8);
  shifted.vertices.rowwise() += Eigen::RowVector3d(5.0, -2.0, 1.0);
  const auto n3 = normalize_to_unit_cube(shifted);
  const Eigen::RowVector3d lo = n3.mesh.vertices.colwise().minCoeff();
  const Eigen::RowVector3d hi = n3.mesh.vertices.colwise().maxCoeff();
  CHECK((lo + hi).norm() < 1e-12);
  CHECK((hi - lo).maxCoeff() == doctest::Approx(1.8));
  CHECK((n3.transform.invert(n3.mesh.vertices) - shifted.vertices).cwiseAbs().maxCoeff() < 1e-6);

  TriangleMesh degenerate;
  degenerate.vertices = Points::Zero(3, 3);
  degenerate.faces.resize(0, 3);
  CHECK_THROWS_AS(normalize_to_unit_cube(degenerate), std::invalid_argument);
}

TEST_CASE("OBJ and point file round trips") {
  const auto dir = std::filesystem::temp_directory_path() / "meshmotion_test_geom";
  std::filesystem::create_directories(dir);

  TriangleMesh mesh = make_uv_sphere(0.7, 5, 7);
  mesh.vertices.col(0).array() += 1.0 / 3.0;
  write_obj(dir / "m.obj", mesh);
  const ObjData back = read_obj(dir / "m.obj");
  CHECK(back.mesh.vertices == mesh.vertices);
  CHECK(back.mesh.faces == mesh.faces);
  CHECK_FALSE(back.colors.has_value());

  Points colors = Points::Constant(mesh.vertex_count(), 3, 0.25);
  write_obj(dir / "c.obj", mesh, &colors);
  REQUIRE(read_obj(dir / "c.obj").colors.has_value());

  {
    std::ofstream quad(dir / "quad.obj");
    quad << "# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\nf 1/1 2/1 3/1 -1/1\n";
  }
  const ObjData q = read_obj(dir / "quad.obj");
  CHECK(q.mesh.face_count() == 2);
  CHECK(q.mesh.faces(1, 2) == 3);

  {
    std::ofstream bad(dir / "bad.obj");
    bad << "v 0 0 0\nv 1 0 0\nf 1 2 7\n";
  }
  CHECK_THROWS_AS(read_obj(dir / "bad.obj"), meshmotion::IoError);
  CHECK_THROWS_AS(read_obj(dir / "missing.obj"), meshmotion::IoError);

  std::mt19937_64 rng(2);
  Points pts = random_points(33, rng);
  pts = pts.cast<float>().cast<double>();
  write_point_file(dir / "p.pct", pts);
  CHECK(read_point_file(dir / "p.pct") == pts);
  CHECK_THROWS_AS(read_point_file(dir / "m.obj"), meshmotion::IoError);

  std::filesystem::remove_all(dir);
}
