#include "meshmotion/toydata/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "meshmotion/errors.hpp"
#include "meshmotion/geom/io.hpp"

namespace meshmotion::toydata {

namespace fs = std::filesystem;
using geom::Points;

namespace {

constexpr uint64_t kSampleStream = 0x9e3779b97f4a7c15ull;

std::string frame_name(const char* pattern, int t, int v = 0) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, t, v);
  return buf;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

void DatasetConfig::validate() const {
  if (assets.empty()) throw std::invalid_argument("dataset config: no assets");
  if (frames < 3) throw std::invalid_argument("dataset config: frames must be at least 3");
  if (width < 11 || height < 11) throw std::invalid_argument("dataset config: images must be at least 11x11");
  if (points < 2) throw std::invalid_argument("dataset config: points must be at least 2");
  if (!(ssim_threshold > 0.0 && ssim_threshold <= 1.0))
    throw std::invalid_argument("dataset config: ssim_threshold must lie in (0, 1]");
  if (bounds.isEmpty()) throw std::invalid_argument("dataset config: empty bounds");
}

DatasetConfig DatasetConfig::mixed(int count, uint64_t seed) {
  if (count < 1) throw std::invalid_argument("mixed dataset: count must be positive");
  DatasetConfig cfg;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(0.7, 1.0);
  constexpr int kinds = static_cast<int>(std::size(kAllKinds));
  for (int i = 0; i < count; ++i) {
    AssetSpec spec;
    spec.kind = kAllKinds[i % kinds];
    spec.params = AssetParams::defaults(spec.kind);
    spec.params.amplitude *= jitter(rng);
    spec.seed = rng();
    cfg.assets.push_back(spec);
  }
  return cfg;
}

DatasetConfig DatasetConfig::from_document(const kv::Document& doc) {
  const kv::Document d = doc.section("data.");
  const long count = d.get_long("count", 8);
  const long seed = d.get_long("seed", 0);
  if (count < 1) throw ConfigError("data.count must be positive");
  DatasetConfig cfg = mixed(static_cast<int>(count), static_cast<uint64_t>(seed));
  if (auto kinds = d.get("kinds")) {
    const auto names = split(*kinds, ',');
    if (names.empty()) throw ConfigError("data.kinds is empty");
    for (size_t i = 0; i < cfg.assets.size(); ++i) {
      AssetKind k;
      try {
        k = parse_kind(names[i % names.size()]);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("data.kinds: ") + e.what());
      }
      const double scale = cfg.assets[i].params.amplitude / AssetParams::defaults(cfg.assets[i].kind).amplitude;
      cfg.assets[i].kind = k;
      cfg.assets[i].params = AssetParams::defaults(k);
      cfg.assets[i].params.amplitude *= scale;
    }
  }
  const double amp_scale = d.get_double("amplitude_scale", 1.0);
  const bool still = d.get_bool("static", false);
  const double max_step = d.get_double("max_step", AssetParams{}.max_step);
  const long resolution = d.get_long("resolution", AssetParams{}.resolution);
  for (AssetSpec& s : cfg.assets) {
    s.params.amplitude = still ? 0.0 : s.params.amplitude * amp_scale;
    s.params.max_step = max_step;
    s.params.resolution = static_cast<int>(resolution);
  }
  cfg.frames = static_cast<int>(d.get_long("frames", cfg.frames));
  cfg.width = static_cast<int>(d.get_long("width", cfg.width));
  cfg.height = static_cast<int>(d.get_long("height", cfg.height));
  cfg.points = static_cast<int>(d.get_long("points", cfg.points));
  cfg.ssim_threshold = d.get_double("ssim_threshold", cfg.ssim_threshold);
  if (auto b = d.get("bounds")) {
    std::istringstream in(*b);
    std::vector<double> v;
    std::string tok;
    while (in >> tok) v.push_back(kv::parse_double(tok, "data.bounds"));
    if (v.size() != 6) throw ConfigError("data.bounds needs six numbers: min xyz then max xyz");
    cfg.bounds = Eigen::AlignedBox3d(Eigen::Vector3d(v[0], v[1], v[2]), Eigen::Vector3d(v[3], v[4], v[5]));
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

void DatasetRecord::validate() const {
  rest_mesh.validate();
  const size_t T = vertex_frames.size();
  if (T < 2 || point_frames.size() != T || views.size() != T)
    throw std::invalid_argument("dataset record " + id + ": frame counts disagree");
  if ((vertex_frames[0] - rest_mesh.vertices).cwiseAbs().maxCoeff() > 1e-7)
    throw std::invalid_argument("dataset record " + id + ": frame 0 differs from the rest mesh");
  for (size_t t = 0; t < T; ++t) {
    if (vertex_frames[t].rows() != rest_mesh.vertex_count() || point_frames[t].rows() != point_frames[0].rows())
      throw std::invalid_argument("dataset record " + id + ": inconsistent point counts");
    views[t].validate();
  }
}

std::string ManifestEntry::reason() const {
  if (!ssim_keep) return "static";
  if (!bounds_keep) return "out_of_bounds";
  return "ok";
}

int Manifest::pass_count() const {
  int n = 0;
  for (const ManifestEntry& e : entries) n += e.passed() ? 1 : 0;
  return n;
}

std::string asset_id(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "asset_%03d", index);
  return buf;
}

DatasetRecord make_record(const AssetSpec& spec, int index, const DatasetConfig& config) {
  const AnimatedAsset asset = synthesize_asset(spec.kind, spec.params, config.frames, spec.seed);
  DatasetRecord rec;
  rec.id = asset_id(index);
  rec.kind = spec.kind;
  rec.seed = spec.seed;
  rec.rest_mesh = asset.rest_mesh;
  rec.colors = asset.colors;
  rec.vertex_frames = asset.frames;

  std::mt19937_64 rng(spec.seed ^ kSampleStream);
  const int n_random = config.points / 2;
  const auto samples = geom::sample_surface_barycentric(asset.rest_mesh, n_random, config.points - n_random, rng);
  const auto cams = default_cameras(config.width, config.height);
  for (int t = 0; t < config.frames; ++t) {
    Points p = geom::evaluate_samples(asset.rest_mesh, asset.frames[static_cast<size_t>(t)], samples);
    rec.point_frames.push_back(p.cast<float>().cast<double>());
    MultiViewFrame mv = render_views(asset.frames[static_cast<size_t>(t)], asset.rest_mesh.faces, asset.colors,
                                     cams, static_cast<double>(t));
    for (Image& img : mv.images) img = quantize8(img);
    rec.views.push_back(std::move(mv));
  }
  rec.ssim = ssim_motion_filter(rec.views, config.ssim_threshold);
  rec.bounds = bounds_filter(rec.vertex_frames, config.bounds);
  return rec;
}

void write_manifest(const fs::path& path, const Manifest& manifest) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write manifest: " + path.string());
  for (const ManifestEntry& e : manifest.entries) {
    out << kv::format_record({{"id", e.id},
                              {"kind", std::string(kind_name(e.kind))},
                              {"seed", std::to_string(e.seed)},
                              {"ssim_score", kv::format_double(e.ssim_score)},
                              {"ssim_keep", e.ssim_keep ? "1" : "0"},
                              {"bounds_keep", e.bounds_keep ? "1" : "0"},
                              {"bounds_frame", std::to_string(e.bounds_frame)},
                              {"status", e.passed() ? "pass" : "reject"},
                              {"reason", e.reason()}})
        << '\n';
  }
  if (!out) throw IoError("failed writing manifest: " + path.string());
}

Manifest read_manifest(const fs::path& dataset_dir) {
  const fs::path path = dataset_dir / "manifest.txt";
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path.string());
  Manifest m;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    kv::Document doc;
    for (auto& [k, v] : kv::parse_record(line)) doc.set(k, v);
    try {
      ManifestEntry e;
      e.id = doc.require("id");
      e.kind = parse_kind(doc.require("kind"));
      e.seed = std::stoull(doc.require("seed"));
      e.ssim_score = doc.require_double("ssim_score");
      e.ssim_keep = doc.require_long("ssim_keep") != 0;
      e.bounds_keep = doc.require_long("bounds_keep") != 0;
      e.bounds_frame = static_cast<int>(doc.require_long("bounds_frame"));
      m.entries.push_back(e);
    } catch (const std::exception& ex) {
      throw ConfigError(path.string() + ": malformed manifest line: " + ex.what());
    }
  }
  return m;
}

void write_record(const fs::path& dataset_dir, const DatasetRecord& rec) {
  const fs::path dir = dataset_dir / rec.id;
  std::error_code ec;
  for (const char* sub : {"views", "verts", "points"}) {
    fs::create_directories(dir / sub, ec);
    if (ec) throw IoError("cannot create " + (dir / sub).string() + ": " + ec.message());
  }
  geom::write_obj(dir / "mesh.obj", rec.rest_mesh, &rec.colors);
  write_cameras(dir / "cameras.txt", rec.views.front().cameras);
  kv::Document meta;
  meta.set("id", rec.id);
  meta.set("kind", std::string(kind_name(rec.kind)));
  meta.set("seed", std::to_string(rec.seed));
  meta.set("frames", static_cast<long>(rec.frame_count()));
  meta.set("views", static_cast<long>(rec.views.front().images.size()));
  meta.set("points", static_cast<long>(rec.point_frames.front().rows()));
  meta.set("ssim_score", rec.ssim.score);
  meta.write_file(dir / "meta.txt");
  for (int t = 0; t < rec.frame_count(); ++t) {
    const auto& mv = rec.views[static_cast<size_t>(t)];
    for (size_t v = 0; v < mv.images.size(); ++v)
      write_png(dir / "views" / frame_name("f%04d_v%d.png", t, static_cast<int>(v)), mv.images[v]);
    geom::write_point_file(dir / "verts" / frame_name("f%04d.pct", t), rec.vertex_frames[static_cast<size_t>(t)]);
    geom::write_point_file(dir / "points" / frame_name("f%04d.pct", t), rec.point_frames[static_cast<size_t>(t)]);
  }
}

DatasetRecord load_record(const fs::path& dataset_dir, const std::string& id) {
  const fs::path dir = dataset_dir / id;
  const kv::Document meta = kv::Document::read_file(dir / "meta.txt");
  DatasetRecord rec;
  rec.id = id;
  try {
    rec.kind = parse_kind(meta.require("kind"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(dir.string() + ": " + e.what());
  }
  rec.seed = std::stoull(meta.require("seed"));
  const long frames = meta.require_long("frames");
  const long views = meta.require_long("views");
  if (frames < 2 || views < 1) throw ConfigError(dir.string() + ": bad frame or view count");
  rec.ssim.score = meta.require_double("ssim_score");

  geom::ObjData obj = geom::read_obj(dir / "mesh.obj");
  rec.rest_mesh = std::move(obj.mesh);
  if (!obj.colors) throw ConfigError(dir.string() + ": mesh.obj lacks vertex colors");
  rec.colors = *obj.colors;
  const auto cams = read_cameras(dir / "cameras.txt");
  if (static_cast<long>(cams.size()) != views) throw ConfigError(dir.string() + ": camera count mismatch");
  for (long t = 0; t < frames; ++t) {
    const int ti = static_cast<int>(t);
    rec.vertex_frames.push_back(geom::read_point_file(dir / "verts" / frame_name("f%04d.pct", ti)));
    rec.point_frames.push_back(geom::read_point_file(dir / "points" / frame_name("f%04d.pct", ti)));
    MultiViewFrame mv;
    mv.timestamp = static_cast<double>(t);
    mv.cameras = cams;
    for (long v = 0; v < views; ++v)
      mv.images.push_back(read_png(dir / "views" / frame_name("f%04d_v%d.png", ti, static_cast<int>(v))));
    rec.views.push_back(std::move(mv));
  }
  try {
    rec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return rec;
}

Manifest build_dataset(const DatasetConfig& config, const fs::path& out_dir) {
  config.validate();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw IoError("cannot create dataset directory: " + out_dir.string());
  Manifest manifest;
  for (size_t i = 0; i < config.assets.size(); ++i) {
    const DatasetRecord rec = make_record(config.assets[i], static_cast<int>(i), config);
    ManifestEntry e;
    e.id = rec.id;
    e.kind = rec.kind;
    e.seed = rec.seed;
    e.ssim_score = rec.ssim.score;
    e.ssim_keep = rec.ssim.keep;
    e.bounds_keep = rec.bounds.keep;
    e.bounds_frame = rec.bounds.offending_frame;
    if (rec.passed()) write_record(out_dir, rec);
    manifest.entries.push_back(e);
  }
  write_manifest(out_dir / "manifest.txt", manifest);
  return manifest;
}

std::vector<DatasetRecord> load_dataset(const fs::path& dataset_dir) {
  const Manifest m = read_manifest(dataset_dir);
  std::vector<DatasetRecord> out;
  for (const ManifestEntry& e : m.entries) {
    if (!e.passed()) continue;
    DatasetRecord rec = load_record(dataset_dir, e.id);
    rec.ssim.keep = e.ssim_keep;
    rec.bounds.keep = e.bounds_keep;
    rec.bounds.offending_frame = e.bounds_frame;
    out.push_back(std::move(rec));
  }
  if (out.empty()) throw ConfigError(dataset_dir.string() + ": no passing assets in manifest");
  return out;
}

}  // namespace meshmotion::toydata
