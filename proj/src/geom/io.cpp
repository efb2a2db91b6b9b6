#include "meshmotion/geom/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "meshmotion/binary_io.hpp"
#include "meshmotion/errors.hpp"

namespace meshmotion::geom {

namespace {

int parse_index(const std::string& token, int vertex_count, const std::filesystem::path& path,
                int line_no) {
  const std::string head = token.substr(0, token.find('/'));
  int idx = 0;
  auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), idx);
  if (ec != std::errc() || ptr != head.data() + head.size() || idx == 0)
    throw IoError(path.string() + ":" + std::to_string(line_no) + ": bad face index '" + token + "'");
  return idx > 0 ? idx - 1 : vertex_count + idx;
}

}  // namespace

ObjData read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open OBJ file: " + path.string());

  std::vector<Eigen::RowVector3d> verts;
  std::vector<Eigen::RowVector3d> colors;
  std::vector<Eigen::Matrix<int32_t, 1, 3>> faces;
  bool all_colored = true;

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Eigen::RowVector3d p;
      if (!(ss >> p[0] >> p[1] >> p[2]))
        throw IoError(path.string() + ":" + std::to_string(line_no) + ": malformed vertex");
      verts.push_back(p);
      Eigen::RowVector3d c;
      if (ss >> c[0] >> c[1] >> c[2]) {
        colors.push_back(c);
      } else {
        all_colored = false;
      }
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ss >> tok) idx.push_back(parse_index(tok, static_cast<int>(verts.size()), path, line_no));
      if (idx.size() < 3)
        throw IoError(path.string() + ":" + std::to_string(line_no) + ": face with fewer than 3 vertices");
      for (size_t k = 1; k + 1 < idx.size(); ++k) faces.push_back({idx[0], idx[k], idx[k + 1]});
    }
  }

  ObjData data;
  data.mesh.vertices.resize(static_cast<Eigen::Index>(verts.size()), 3);
  for (size_t i = 0; i < verts.size(); ++i) data.mesh.vertices.row(static_cast<Eigen::Index>(i)) = verts[i];
  data.mesh.faces.resize(static_cast<Eigen::Index>(faces.size()), 3);
  for (size_t i = 0; i < faces.size(); ++i) data.mesh.faces.row(static_cast<Eigen::Index>(i)) = faces[i];
  if (all_colored && !verts.empty() && colors.size() == verts.size()) {
    Points c(static_cast<Eigen::Index>(colors.size()), 3);
    for (size_t i = 0; i < colors.size(); ++i) c.row(static_cast<Eigen::Index>(i)) = colors[i];
    data.colors = std::move(c);
  }
  try {
    data.mesh.validate();
  } catch (const std::invalid_argument& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return data;
}

void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh, const Points* colors) {
  if (colors && colors->rows() != mesh.vertex_count())
    throw std::invalid_argument("write_obj: color count does not match vertex count");
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw IoError("cannot open for writing: " + path.string());
  // %.17g round-trips doubles exactly.
  for (Eigen::Index i = 0; i < mesh.vertex_count(); ++i) {
    if (colors) {
      std::fprintf(f, "v %.17g %.17g %.17g %.17g %.17g %.17g\n", mesh.vertices(i, 0), mesh.vertices(i, 1),
                   mesh.vertices(i, 2), (*colors)(i, 0), (*colors)(i, 1), (*colors)(i, 2));
    } else {
      std::fprintf(f, "v %.17g %.17g %.17g\n", mesh.vertices(i, 0), mesh.vertices(i, 1), mesh.vertices(i, 2));
    }
  }
  for (Eigen::Index i = 0; i < mesh.face_count(); ++i)
    std::fprintf(f, "f %d %d %d\n", mesh.faces(i, 0) + 1, mesh.faces(i, 1) + 1, mesh.faces(i, 2) + 1);
  const bool ok = std::ferror(f) == 0;
  if (std::fclose(f) != 0 || !ok) throw IoError("write failed: " + path.string());
}

void write_point_file(const std::filesystem::path& path, const Points& points) {
  binary::Writer w(path);
  w.magic("PCT1");
  w.scalar<uint32_t>(static_cast<uint32_t>(points.rows()));
  std::vector<float> buf(static_cast<size_t>(points.size()));
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    for (int k = 0; k < 3; ++k) buf[static_cast<size_t>(i * 3 + k)] = static_cast<float>(points(i, k));
  w.floats(buf);
  w.finish();
}

Points read_point_file(const std::filesystem::path& path) {
  binary::Reader r(path);
  r.expect_magic("PCT1");
  const auto n = r.scalar<uint32_t>();
  std::vector<float> buf(static_cast<size_t>(n) * 3);
  r.floats(buf);
  Points out(static_cast<Eigen::Index>(n), 3);
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (int k = 0; k < 3; ++k) out(i, k) = buf[static_cast<size_t>(i * 3 + k)];
  return out;
}

}  // namespace meshmotion::geom
