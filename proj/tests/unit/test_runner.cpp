#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "meshmotion/errors.hpp"
#include "meshmotion/geom/io.hpp"
#include "meshmotion/geom/metrics.hpp"
#include "meshmotion/runner/pipeline.hpp"

using namespace meshmotion;
using runner::Trajectory;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("meshmotion_runner_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Trajectory random_trajectory(int frames, int points, uint64_t seed, double step) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, step);
  Trajectory t;
  geom::Points p = geom::Points::Random(points, 3);
  for (int f = 0; f < frames; ++f) {
    if (f > 0)
      for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] += n(rng);
    t.frames.push_back(p);
  }
  return t;
}

bool same(const Trajectory& a, const Trajectory& b) {
  if (a.frame_count() != b.frame_count()) return false;
  for (int f = 0; f < a.frame_count(); ++f)
    if (a.frames[f].rows() != b.frames[f].rows() || a.frames[f] != b.frames[f]) return false;
  return true;
}

// Small enough for unit tests on one core.
runner::RunConfig tiny_config() {
  runner::RunConfig c = runner::RunConfig::desk();
  c.vae.points = 64;
  c.vae.latents = 8;
  c.vae.width = 32;
  c.vae.latent_channels = 8;
  c.vae.depth = 1;
  c.vae.heads = 2;
  c.vae.patch = 16;
  c.vae.vit_depth = 1;
  c.vae.train_queries = 0;
  c.diffusion.latents = 8;
  c.diffusion.latent_channels = 8;
  c.diffusion.width = 32;
  c.diffusion.depth = 1;
  c.diffusion.heads = 2;
  c.diffusion.geometry_tokens = 8;
  c.diffusion.patch = 16;
  c.diffusion.sampler_steps = 4;
  for (auto* o : {&c.vae_train, &c.diffusion_train}) {
    o->batch = 2;
    o->warmup = 10;
    o->eval_every = 0;
    o->log_every = 1;
  }
  return c;
}

std::vector<toydata::DatasetRecord> tiny_records(int count) {
  toydata::DatasetConfig dc = toydata::DatasetConfig::mixed(count + 4, 7);
  dc.points = 64;
  std::vector<toydata::DatasetRecord> out;
  for (size_t i = 0; i < dc.assets.size() && static_cast<int>(out.size()) < count; ++i) {
    auto r = toydata::make_record(dc.assets[i], static_cast<int>(i), dc);
    if (r.passed()) out.push_back(std::move(r));
  }
  REQUIRE(static_cast<int>(out.size()) == count);
  return out;
}

}  // namespace

TEST_CASE("refine: zero threshold is the identity") {
  const Trajectory t = random_trajectory(6, 40, 1, 0.02);
  CHECK(same(runner::refine_trajectory(t, 0.0), t));
}

TEST_CASE("refine: sub-threshold motion collapses onto frame 0") {
  const Trajectory t = random_trajectory(8, 30, 2, 0.001);
  const Trajectory r = runner::refine_trajectory(t, 0.05);
  for (const auto& f : r.frames) CHECK(f == t.frames.front());
}

TEST_CASE("refine: hand-executed three-frame example") {
  Trajectory t;
  for (double x : {0.0, 0.05, 0.3}) {
    geom::Points p(1, 3);
    p << x, 0.0, 0.0;
    t.frames.push_back(p);
  }
  const Trajectory r = runner::refine_trajectory(t, 0.1);
  CHECK(r.frames[0](0, 0) == 0.0);
  CHECK(r.frames[1](0, 0) == 0.0);
  CHECK(r.frames[2](0, 0) == 0.3);
}

TEST_CASE("refine: compares against the refined previous frame") {
  // Raw steps of 0.06 each stay under 0.1, yet the accumulated drift crosses it.
  Trajectory t;
  for (double x : {0.0, 0.06, 0.12, 0.18}) {
    geom::Points p(1, 3);
    p << x, 0.0, 0.0;
    t.frames.push_back(p);
  }
  const Trajectory r = runner::refine_trajectory(t, 0.1);
  CHECK(r.frames[1](0, 0) == 0.0);
  CHECK(r.frames[2](0, 0) == 0.12);
  CHECK(r.frames[3](0, 0) == 0.12);
}

TEST_CASE("refine: idempotent and only reuses previous or raw positions") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const Trajectory t = random_trajectory(7, 25, seed, 0.03);
    const double delta = 0.02 + 0.01 * static_cast<double>(seed % 5);
    const Trajectory r = runner::refine_trajectory(t, delta);
    CHECK(same(runner::refine_trajectory(r, delta), r));
    CHECK(r.frames[0] == t.frames[0]);
    for (int f = 1; f < t.frame_count(); ++f)
      for (Eigen::Index i = 0; i < t.point_count(); ++i) {
        const bool prev = r.frames[f].row(i) == r.frames[f - 1].row(i);
        const bool raw = r.frames[f].row(i) == t.frames[f].row(i);
        CHECK((prev || raw));
      }
  }
}

TEST_CASE("refine: negative threshold rejected") {
  CHECK_THROWS_AS(runner::refine_trajectory(random_trajectory(2, 3, 0, 0.1), -1e-3), std::invalid_argument);
}

TEST_CASE("trajectory file round-trips float-representable values bit-exactly") {
  Trajectory t = random_trajectory(5, 17, 3, 0.1);
  for (auto& f : t.frames) f = f.cast<float>().cast<double>();
  const fs::path dir = scratch("trj");
  runner::save_trajectory(dir / "a.trj", t);
  CHECK(same(runner::load_trajectory(dir / "a.trj"), t));

  std::ifstream in(dir / "a.trj", std::ios::binary);
  char magic[4];
  uint32_t dims[2];
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(dims), sizeof dims);
  CHECK(std::string(magic, 4) == "TRJ1");
  CHECK(dims[0] == 5u);
  CHECK(dims[1] == 17u);
  CHECK(fs::file_size(dir / "a.trj") == 12u + 5u * 17u * 3u * 4u);
}

TEST_CASE("trajectory file: corrupt inputs raise errors") {
  const fs::path dir = scratch("trj_bad");
  {
    std::ofstream(dir / "magic.trj", std::ios::binary) << "NOPE00000000";
  }
  CHECK_THROWS(runner::load_trajectory(dir / "magic.trj"));
  runner::save_trajectory(dir / "ok.trj", random_trajectory(2, 4, 0, 0.1));
  fs::resize_file(dir / "ok.trj", fs::file_size(dir / "ok.trj") - 4);
  CHECK_THROWS(runner::load_trajectory(dir / "ok.trj"));
  CHECK_THROWS(runner::load_trajectory(dir / "missing.trj"));
}

TEST_CASE("drive_mesh keeps faces and exports re-import to the trajectory") {
  const auto rec = tiny_records(1).front();
  Trajectory t;
  for (const auto& f : rec.vertex_frames) t.frames.push_back(f);
  const auto meshes = runner::drive_mesh(rec.rest_mesh, t);
  REQUIRE(meshes.size() == t.frames.size());
  for (size_t f = 0; f < meshes.size(); ++f) {
    CHECK(meshes[f].faces == rec.rest_mesh.faces);
    CHECK(meshes[f].vertices == t.frames[f]);
  }

  const fs::path dir = scratch("drive");
  runner::export_animation(dir, rec.rest_mesh, t, &rec.colors);
  CHECK(fs::exists(dir / "trajectory.trj"));
  for (int f = 0; f < t.frame_count(); ++f) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04d.obj", f);
    const geom::ObjData obj = geom::read_obj(dir / name);
    CHECK(obj.mesh.faces == rec.rest_mesh.faces);
    if (f == 0) CHECK(obj.mesh.vertices == rec.rest_mesh.vertices);
    CHECK(geom::chamfer_distance(obj.mesh.vertices, t.frames[f]) < 1e-5);
  }

  Trajectory wrong = t;
  wrong.frames[1] = wrong.frames[1].topRows(3);
  CHECK_THROWS_AS(runner::drive_mesh(rec.rest_mesh, wrong), std::invalid_argument);
  Trajectory short_traj;
  short_traj.frames.push_back(geom::Points::Zero(3, 3));
  CHECK_THROWS_AS(runner::drive_mesh(rec.rest_mesh, short_traj), std::invalid_argument);
}

TEST_CASE("run config: defaults, validation and document round trip") {
  runner::RunConfig c = runner::RunConfig::desk();
  CHECK(c.delta == doctest::Approx(0.01));
  c.validate();
  c.delta = -1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = runner::RunConfig::desk();
  c.vae_train.batch = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c = runner::RunConfig::desk();
  c.apply_seed(42);
  c.delta = 0.25;
  c.vae_train.max_steps = 17;
  kv::Document doc;
  c.write_to(doc);
  const runner::RunConfig back = runner::RunConfig::from_document(doc);
  CHECK(back.seed == 42u);
  CHECK(back.vae.seed == 42u);
  CHECK(back.diffusion.seed == c.diffusion.seed);
  CHECK(back.delta == 0.25);
  CHECK(back.vae_train.max_steps == 17);

  kv::Document bad;
  bad.set("vae_train.batch", std::string("many"));
  CHECK_THROWS_AS(runner::RunConfig::from_document(bad), ConfigError);
}

TEST_CASE("planned steps follow epochs, batch and the cap") {
  runner::OptimizerSettings o;
  o.batch = 4;
  o.epochs = 3;
  CHECK(runner::planned_steps(o, 10) == 9);  // 3 per epoch
  o.max_steps = 5;
  CHECK(runner::planned_steps(o, 10) == 5);
  o.epochs = 0;
  CHECK(runner::planned_steps(o, 10) == 0);
}

TEST_CASE("prepare_assets rejects mismatched point counts") {
  auto cfg = tiny_config();
  cfg.vae.points = 128;
  CHECK_THROWS_AS(runner::prepare_assets(tiny_records(1), cfg), ConfigError);
}

TEST_CASE("train_vae: zero epochs keep the initialization") {
  auto cfg = tiny_config();
  cfg.vae_train.epochs = 0;
  const auto recs = tiny_records(1);
  const runner::VaeRun run = runner::train_vae(cfg, recs, {});
  CHECK(run.steps.empty());
  const vae::VaeModel<float> init(cfg.vae);
  const auto a = run.model.to_checkpoint().tensors;
  const auto b = init.to_checkpoint().tensors;
  REQUIRE(a.size() == b.size());
  CHECK(a == b);
}

TEST_CASE("train_vae: deterministic and beats the identity baseline on one asset") {
  auto cfg = tiny_config();
  cfg.vae_train.epochs = 1000;
  cfg.vae_train.max_steps = 300;
  cfg.vae_train.lr = 3e-3;
  cfg.vae_train.eval_every = 100;
  const auto recs = tiny_records(1);
  std::ostringstream log_a, log_b;
  const runner::VaeRun a = runner::train_vae(cfg, recs, {}, &log_a);
  const runner::VaeRun b = runner::train_vae(cfg, recs, {}, &log_b);
  CHECK(a.steps.size() == 300u);
  CHECK(log_a.str() == log_b.str());
  CHECK(a.evals.back().chamfer < a.baseline_chamfer);
  CHECK(a.best_chamfer <= a.evals.back().chamfer);
}

TEST_CASE("train_diffusion: latent shape mismatch is a config error") {
  auto cfg = tiny_config();
  cfg.diffusion.latent_channels = 4;
  const vae::VaeModel<float> vae_model(cfg.vae);
  CHECK_THROWS_AS(runner::train_diffusion(cfg, vae_model, tiny_records(1)), ConfigError);
  CHECK_THROWS_AS(runner::check_compatible(cfg.vae, cfg.diffusion), ConfigError);
}

TEST_CASE("latent cache: a hit reproduces the encoded latents bit-exactly") {
  auto cfg = tiny_config();
  const vae::VaeModel<float> vae_model(cfg.vae);
  const auto recs = tiny_records(2);
  const auto assets = runner::prepare_assets(recs, cfg);
  const fs::path dir = scratch("cache");
  const auto fresh = runner::encode_latents(vae_model, assets);
  const auto written = runner::cached_latents(vae_model, assets, dir / "latents.cache");
  const auto loaded = runner::cached_latents(vae_model, assets, dir / "latents.cache");
  REQUIRE(loaded.latents.size() == fresh.latents.size());
  for (size_t i = 0; i < fresh.latents.size(); ++i) {
    CHECK(written.latents[i] == fresh.latents[i]);
    CHECK(loaded.latents[i] == fresh.latents[i]);
  }
  CHECK(loaded.encoder_hash == runner::parameter_hash(vae_model.store()));

  // Training from the cache equals training from fresh encodings.
  cfg.diffusion_train.max_steps = 5;
  const auto from_cache = runner::train_diffusion(cfg, vae_model, recs, dir / "latents.cache");
  const auto from_fresh = runner::train_diffusion(cfg, vae_model, recs);
  REQUIRE(from_cache.steps.size() == 5u);
  for (size_t i = 0; i < 5; ++i) CHECK(from_cache.steps[i].loss == from_fresh.steps[i].loss);

  // Different encoder weights invalidate the cache.
  auto other_cfg = cfg.vae;
  other_cfg.seed += 1;
  const vae::VaeModel<float> other(other_cfg);
  const auto refreshed = runner::cached_latents(other, assets, dir / "latents.cache");
  CHECK(refreshed.encoder_hash == runner::parameter_hash(other.store()));
  CHECK(refreshed.latents[0] != fresh.latents[0]);
}

TEST_CASE("train_diffusion: loss trends downward over 500 steps") {
  auto cfg = tiny_config();
  cfg.diffusion_train.epochs = 100000;
  cfg.diffusion_train.max_steps = 500;
  cfg.diffusion_train.lr = 2e-3;
  const vae::VaeModel<float> vae_model(cfg.vae);
  const auto run = runner::train_diffusion(cfg, vae_model, tiny_records(4));
  REQUIRE(run.steps.size() == 500u);
  auto window_mean = [&](size_t begin) {
    double s = 0.0;
    for (size_t i = begin; i < begin + 20; ++i) s += run.steps[i].loss;
    return s / 20.0;
  };
  CHECK(window_mean(480) < window_mean(0));
}

TEST_CASE("train_diffusion: frozen parameters give stationary loss statistics") {
  auto cfg = tiny_config();
  cfg.diffusion_train.max_steps = 50;
  cfg.diffusion_train.lr = 0.0;
  cfg.diffusion_train.lr_floor = 0.0;
  const vae::VaeModel<float> vae_model(cfg.vae);
  const auto recs = tiny_records(2);
  auto stats = [&](uint64_t seed) {
    runner::RunConfig c = cfg;
    c.seed = seed;  // noise draws only; model init stays on diffusion.seed
    const auto run = runner::train_diffusion(c, vae_model, recs);
    double s = 0.0, s2 = 0.0;
    for (const auto& r : run.steps) {
      s += r.loss;
      s2 += r.loss * r.loss;
    }
    const double n = static_cast<double>(run.steps.size());
    return std::pair{s / n, std::sqrt(std::max(0.0, s2 / n - (s / n) * (s / n)))};
  };
  const auto [m1, s1] = stats(1);
  const auto [m2, s2] = stats(2);
  CHECK(std::abs(m1 - m2) <= 2.0 * std::max(s1, s2));
}

TEST_CASE("infer: output shape, frame 0 pinning and determinism") {
  auto cfg = tiny_config();
  const vae::VaeModel<float> vae_model(cfg.vae);
  const diffusion::DiffusionModel<float> diff_model(cfg.diffusion);
  const auto rec = tiny_records(1).front();
  std::vector<toydata::Image> frames;
  for (const auto& v : rec.views) frames.push_back(v.images.front());
  const geom::Camera cam = toydata::default_cameras(frames[0].width, frames[0].height).front();
  const Trajectory a = runner::infer(rec.rest_mesh, frames, cam, vae_model, diff_model, 3, 11);
  const Trajectory b = runner::infer(rec.rest_mesh, frames, cam, vae_model, diff_model, 3, 11);
  CHECK(a.frame_count() == static_cast<int>(frames.size()));
  CHECK(a.point_count() == rec.rest_mesh.vertices.rows());
  CHECK(a.frames[0] == rec.rest_mesh.vertices);
  CHECK(same(a, b));

  const fs::path dir = scratch("infer");
  runner::save_trajectory(dir / "a.trj", a);
  runner::save_trajectory(dir / "b.trj", b);
  std::ifstream fa(dir / "a.trj", std::ios::binary), fb(dir / "b.trj", std::ios::binary);
  CHECK(std::string(std::istreambuf_iterator<char>(fa), {}) == std::string(std::istreambuf_iterator<char>(fb), {}));

  CHECK_THROWS_AS(runner::infer(rec.rest_mesh, {frames[0]}, cam, vae_model, diff_model, 3, 11), std::invalid_argument);
}

TEST_CASE("load_frames reads sorted pngs and falls back to the front camera") {
  const auto rec = tiny_records(1).front();
  const fs::path dir = scratch("frames");
  for (int t = rec.frame_count() - 1; t >= 0; --t) {
    char name[32];
    std::snprintf(name, sizeof name, "f%03d.png", t);
    toydata::write_png(dir / name, rec.views[static_cast<size_t>(t)].images.front());
  }
  const runner::FrameSequence seq = runner::load_frames(dir);
  REQUIRE(static_cast<int>(seq.images.size()) == rec.frame_count());
  for (int t = 0; t < rec.frame_count(); ++t) CHECK(seq.images[t] == rec.views[t].images.front());
  const geom::Camera front = toydata::default_cameras(seq.images[0].width, seq.images[0].height).front();
  CHECK(seq.camera.center == front.center);
  CHECK_THROWS(runner::load_frames(scratch("frames_empty")));
}
