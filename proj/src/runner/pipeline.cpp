#include "meshmotion/runner/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>

#include "meshmotion/diffusion/train.hpp"
#include "meshmotion/errors.hpp"
#include "meshmotion/geom/metrics.hpp"
#include "meshmotion/geom/sampling.hpp"
#include "meshmotion/geom/transform.hpp"
#include "meshmotion/nn/optim.hpp"
#include "meshmotion/toydata/image.hpp"
#include "meshmotion/toydata/render.hpp"
#include "meshmotion/vae/train.hpp"

namespace meshmotion::runner {

namespace fs = std::filesystem;
using nn::Matrix;

std::vector<const vae::ImageInput<float>*> PreparedAsset::front_ptrs() const {
  std::vector<const vae::ImageInput<float>*> out;
  for (const auto& f : front) out.push_back(&f);
  return out;
}

std::vector<PreparedAsset> prepare_assets(const std::vector<toydata::DatasetRecord>& records, const RunConfig& config) {
  std::vector<PreparedAsset> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (r.point_frames.size() < 2) throw ConfigError(r.id + ": need at least 2 frames");
    const auto n = r.point_frames.front().rows();
    if (n != config.vae.points)
      throw ConfigError(r.id + ": dataset has " + std::to_string(n) + " points per frame, vae.points is " +
                        std::to_string(config.vae.points));
    if (n < config.vae.latents || n < config.diffusion.geometry_tokens)
      throw ConfigError(r.id + ": fewer points than latent tokens");
    const auto& img = r.views.front().images.front();
    for (int p : {config.vae.patch, config.diffusion.patch})
      if (img.width % p != 0 || img.height % p != 0)
        throw ConfigError(r.id + ": image size " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                          " is not divisible by patch " + std::to_string(p));
    PreparedAsset a;
    a.record = &r;
    a.vae_geometry = vae::make_geometry_input<float>(r.point_frames.front(), config.vae.latents);
    a.diffusion_geometry = vae::make_geometry_input<float>(r.point_frames.front(), config.diffusion.geometry_tokens);
    for (const auto& v : r.views) {
      a.views.push_back(vae::make_image_input<float>(v, config.vae.patch));
      a.front.push_back(vae::make_image_input<float>(v, config.diffusion.patch, {0}));
    }
    out.push_back(std::move(a));
  }
  return out;
}

double reconstruction_chamfer(const vae::VaeModel<float>& model, const std::vector<PreparedAsset>& assets) {
  double sum = 0.0;
  long count = 0;
  for (const auto& a : assets)
    for (int t = 0; t < a.frame_count(); ++t) {
      const auto z = model.encode(a.vae_geometry, a.views[static_cast<size_t>(t)], nullptr);
      const geom::Points pred = model.decode(z.mu, a.vae_geometry.points).cast<double>();
      sum += geom::chamfer_distance(pred, a.record->point_frames[static_cast<size_t>(t)]);
      ++count;
    }
  return count ? sum / static_cast<double>(count) : 0.0;
}

double identity_chamfer(const std::vector<PreparedAsset>& assets) {
  double sum = 0.0;
  long count = 0;
  for (const auto& a : assets)
    for (const auto& f : a.record->point_frames) {
      sum += geom::chamfer_distance(a.record->point_frames.front(), f);
      ++count;
    }
  return count ? sum / static_cast<double>(count) : 0.0;
}

long planned_steps(const OptimizerSettings& opt, long samples) {
  const long per_epoch = (samples + opt.batch - 1) / opt.batch;
  long total = per_epoch * opt.epochs;
  if (opt.max_steps > 0) total = std::min<long>(total, opt.max_steps);
  return total;
}

namespace {

template <class T>
std::vector<Matrix<T>> snapshot(const nn::ParameterStore<T>& store) {
  std::vector<Matrix<T>> out;
  for (const auto& p : store.params()) out.push_back(p->value);
  return out;
}

template <class T>
void restore(nn::ParameterStore<T>& store, const std::vector<Matrix<T>>& values) {
  const auto& params = store.params();
  for (size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

nn::AdamOptions adam_options(const OptimizerSettings& o) {
  nn::AdamOptions a;
  a.clip_norm = o.clip_norm;
  return a;
}

// Epoch-wise shuffled order over `count` items.
class BatchOrder {
 public:
  BatchOrder(long count, std::mt19937_64& rng) : order_(static_cast<size_t>(count)), rng_(&rng) {
    std::iota(order_.begin(), order_.end(), 0L);
    pos_ = order_.size();
  }
  long next() {
    if (pos_ >= order_.size()) {
      std::shuffle(order_.begin(), order_.end(), *rng_);
      pos_ = 0;
    }
    return order_[pos_++];
  }

 private:
  std::vector<long> order_;
  size_t pos_ = 0;
  std::mt19937_64* rng_;
};

}  // namespace

VaeRun train_vae(const RunConfig& config, const std::vector<toydata::DatasetRecord>& train,
                 const std::vector<toydata::DatasetRecord>& validation, std::ostream* log) {
  config.validate();
  if (train.empty()) throw ConfigError("train_vae: no training assets");
  const auto train_assets = prepare_assets(train, config);
  const auto val_assets = validation.empty() ? std::vector<PreparedAsset>{} : prepare_assets(validation, config);
  const auto& eval_set = validation.empty() ? train_assets : val_assets;

  VaeRun run{vae::VaeModel<float>(config.vae), {}, {}, 0, 0.0, identity_chamfer(eval_set)};
  std::vector<std::pair<int, int>> pairs;
  for (size_t a = 0; a < train_assets.size(); ++a)
    for (int t = 0; t < train_assets[a].frame_count(); ++t) pairs.emplace_back(static_cast<int>(a), t);

  const OptimizerSettings& opt = config.vae_train;
  const long total = planned_steps(opt, static_cast<long>(pairs.size()));
  nn::Adam<float> adam(run.model.store(), adam_options(opt));
  std::mt19937_64 rng(config.seed);
  BatchOrder order(static_cast<long>(pairs.size()), rng);

  std::vector<Matrix<float>> best = snapshot(run.model.store());
  run.best_chamfer = reconstruction_chamfer(run.model, eval_set);
  run.evals.push_back({0, run.best_chamfer});
  if (log) *log << "eval step=0 chamfer=" << run.best_chamfer << " identity=" << run.baseline_chamfer << '\n';

  for (long step = 0; step < total; ++step) {
    std::vector<vae::VaeSample<float>> batch;
    for (int b = 0; b < opt.batch; ++b) {
      const auto [a, t] = pairs[static_cast<size_t>(order.next())];
      const PreparedAsset& pa = train_assets[static_cast<size_t>(a)];
      batch.push_back({&pa.vae_geometry, &pa.views[static_cast<size_t>(t)], &pa.record->point_frames[static_cast<size_t>(t)]});
    }
    const double lr = nn::cosine_lr(opt.lr, opt.lr_floor, step, total, opt.warmup);
    const vae::VaeStepLosses l = vae::vae_training_step(run.model, adam, batch, lr, rng);
    run.steps.push_back({step + 1, lr, l.total, l.deformation, l.kl});
    if (log && (step + 1) % opt.log_every == 0)
      *log << "step=" << step + 1 << " lr=" << lr << " total=" << l.total << " deformation=" << l.deformation
           << " kl=" << l.kl << '\n';
    const bool last = step + 1 == total;
    if (last || (opt.eval_every > 0 && (step + 1) % opt.eval_every == 0)) {
      const double cd = reconstruction_chamfer(run.model, eval_set);
      run.evals.push_back({step + 1, cd});
      if (log) *log << "eval step=" << step + 1 << " chamfer=" << cd << '\n';
      if (cd < run.best_chamfer) {
        run.best_chamfer = cd;
        run.best_step = step + 1;
        best = snapshot(run.model.store());
      }
    }
  }
  restore(run.model.store(), best);
  return run;
}

uint64_t parameter_hash(const nn::ParameterStore<float>& store) {
  // FNV-1a over names, shapes and raw float bits.
  uint64_t h = 1469598103934665603ull;
  auto mix = [&](const void* data, size_t n) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& p : store.params()) {
    mix(p->name.data(), p->name.size());
    const int64_t shape[2] = {p->value.rows(), p->value.cols()};
    mix(shape, sizeof(shape));
    mix(p->value.data(), static_cast<size_t>(p->value.size()) * sizeof(float));
  }
  return h;
}

void LatentCache::save(const fs::path& path) const {
  nn::Checkpoint ck;
  ck.tag = "latents";
  ck.config.set("latents.encoder_hash", std::to_string(encoder_hash));
  ck.config.set("latents.count", static_cast<long>(ids.size()));
  for (size_t i = 0; i < ids.size(); ++i) {
    nn::NamedTensor t;
    t.name = ids[i];
    t.rows = latents[i].rows();
    t.cols = latents[i].cols();
    t.data.assign(latents[i].data(), latents[i].data() + latents[i].size());
    ck.tensors.push_back(std::move(t));
  }
  ck.save(path);
}

LatentCache LatentCache::load(const fs::path& path) {
  const nn::Checkpoint ck = nn::Checkpoint::load(path);
  if (ck.tag != "latents") throw ConfigError(path.string() + ": not a latent cache");
  LatentCache c;
  c.encoder_hash = std::stoull(ck.config.require("latents.encoder_hash"));
  for (const auto& t : ck.tensors) {
    c.ids.push_back(t.name);
    Matrix<float> m(t.rows, t.cols);
    std::copy(t.data.begin(), t.data.end(), m.data());
    c.latents.push_back(std::move(m));
  }
  return c;
}

LatentCache encode_latents(const vae::VaeModel<float>& model, const std::vector<PreparedAsset>& assets) {
  LatentCache c;
  c.encoder_hash = parameter_hash(model.store());
  const int M = model.config().latents, C0 = model.config().latent_channels;
  for (const auto& a : assets) {
    Matrix<float> z(static_cast<Eigen::Index>(a.frame_count()) * M, C0);
    for (int t = 0; t < a.frame_count(); ++t)
      z.middleRows(static_cast<Eigen::Index>(t) * M, M) = model.encode(a.vae_geometry, a.views[static_cast<size_t>(t)], nullptr).mu;
    c.ids.push_back(a.record->id);
    c.latents.push_back(std::move(z));
  }
  return c;
}

LatentCache cached_latents(const vae::VaeModel<float>& model, const std::vector<PreparedAsset>& assets,
                           const fs::path& path) {
  if (fs::exists(path)) {
    LatentCache c = LatentCache::load(path);
    bool ok = c.encoder_hash == parameter_hash(model.store()) && c.ids.size() == assets.size();
    for (size_t i = 0; ok && i < assets.size(); ++i) ok = c.ids[i] == assets[i].record->id;
    if (ok) return c;
  }
  LatentCache c = encode_latents(model, assets);
  c.save(path);
  return c;
}

double latent_scale(const LatentCache& cache, double sigma_data) {
  double sq = 0.0;
  long n = 0;
  for (const auto& z : cache.latents) {
    sq += static_cast<double>(z.template cast<double>().squaredNorm());
    n += static_cast<long>(z.size());
  }
  const double rms = n ? std::sqrt(sq / static_cast<double>(n)) : 0.0;
  return rms > 0.0 ? sigma_data / rms : 1.0;
}

void check_compatible(const vae::VaeConfig& v, const diffusion::DiffusionConfig& d) {
  if (v.latents != d.latents || v.latent_channels != d.latent_channels)
    throw ConfigError("latent shape mismatch: vae is " + std::to_string(v.latents) + "x" +
                      std::to_string(v.latent_channels) + ", diffusion expects " + std::to_string(d.latents) + "x" +
                      std::to_string(d.latent_channels));
}

DiffusionRun train_diffusion(const RunConfig& config, const vae::VaeModel<float>& vae_model,
                             const std::vector<toydata::DatasetRecord>& train,
                             const std::optional<fs::path>& cache_path, std::ostream* log) {
  config.validate();
  check_compatible(vae_model.config(), config.diffusion);
  if (train.empty()) throw ConfigError("train_diffusion: no training assets");
  RunConfig cfg = config;
  cfg.vae = vae_model.config();
  const auto assets = prepare_assets(train, cfg);
  for (const auto& a : assets)
    if (a.frame_count() < 3) throw ConfigError(a.record->id + ": diffusion training needs at least 3 frames");
  const LatentCache cache = cache_path ? cached_latents(vae_model, assets, *cache_path) : encode_latents(vae_model, assets);

  diffusion::DiffusionConfig dcfg = cfg.diffusion;
  dcfg.latent_scale = latent_scale(cache, dcfg.sigma_data);
  DiffusionRun run{diffusion::DiffusionModel<float>(dcfg), {}};
  std::vector<Matrix<float>> scaled;
  for (const auto& z : cache.latents) scaled.push_back(z * static_cast<float>(dcfg.latent_scale));
  std::vector<std::vector<const vae::ImageInput<float>*>> frames;
  for (const auto& a : assets) frames.push_back(a.front_ptrs());

  const OptimizerSettings& opt = cfg.diffusion_train;
  const long total = planned_steps(opt, static_cast<long>(assets.size()));
  nn::Adam<float> adam(run.model.store(), adam_options(opt));
  std::mt19937_64 rng(cfg.seed ^ 0x2545f4914f6cdd1dull);
  BatchOrder order(static_cast<long>(assets.size()), rng);
  if (log) *log << "latent_scale=" << dcfg.latent_scale << " steps=" << total << '\n';
  for (long step = 0; step < total; ++step) {
    std::vector<diffusion::DiffusionSample<float>> batch;
    for (int b = 0; b < opt.batch; ++b) {
      const auto a = static_cast<size_t>(order.next());
      batch.push_back({&assets[a].diffusion_geometry, frames[a], &scaled[a]});
    }
    const double lr = nn::cosine_lr(opt.lr, opt.lr_floor, step, total, opt.warmup);
    const double loss = diffusion::diffusion_training_step(run.model, adam, batch, lr, rng);
    run.steps.push_back({step + 1, lr, loss, 0.0, 0.0});
    if (log && (step + 1) % opt.log_every == 0) *log << "step=" << step + 1 << " lr=" << lr << " loss=" << loss << '\n';
  }
  return run;
}

Trajectory infer(const geom::TriangleMesh& mesh, const std::vector<toydata::Image>& frames, const geom::Camera& camera,
                 const vae::VaeModel<float>& vae_model, const diffusion::DiffusionModel<float>& diffusion_model,
                 int steps, uint64_t seed) {
  check_compatible(vae_model.config(), diffusion_model.config());
  mesh.validate();
  if (frames.size() < 2) throw std::invalid_argument("infer: need at least 2 frames");
  const geom::NormalizedMesh norm = geom::normalize_to_unit_cube(mesh);

  const int n = vae_model.config().points;
  std::mt19937_64 rng(seed);
  const geom::PointCloud p1 = geom::sample_surface(norm.mesh, n / 2, n - n / 2, rng);
  if (p1.size() < diffusion_model.config().geometry_tokens) throw std::invalid_argument("infer: too few surface samples");
  const auto geometry = vae::make_geometry_input<float>(p1.points, diffusion_model.config().geometry_tokens);

  std::vector<vae::ImageInput<float>> inputs;
  for (size_t t = 0; t < frames.size(); ++t) {
    const toydata::Image& img = frames[t];
    if (img.width != camera.width || img.height != camera.height)
      throw std::invalid_argument("infer: frame " + std::to_string(t) + " does not match the camera resolution");
    const int p = diffusion_model.config().patch;
    if (img.width % p != 0 || img.height % p != 0)
      throw std::invalid_argument("infer: frame size is not divisible by the diffusion patch size");
    toydata::MultiViewFrame f;
    f.images = {img};
    f.cameras = {camera};
    f.timestamp = static_cast<int>(t);
    inputs.push_back(vae::make_image_input<float>(f, p, {0}));
  }
  std::vector<const vae::ImageInput<float>*> ptrs;
  for (const auto& i : inputs) ptrs.push_back(&i);

  const Matrix<float> z = diffusion::sample_latents(diffusion_model, geometry, ptrs, steps, seed);
  const int M = vae_model.config().latents;
  Trajectory traj;
  traj.frames.push_back(mesh.vertices);
  for (size_t t = 1; t < frames.size(); ++t) {
    const Matrix<float> zt = z.middleRows(static_cast<Eigen::Index>(t) * M, M);
    const geom::Points pred = vae_model.decode(zt, norm.mesh.vertices).cast<double>();
    if (!pred.allFinite()) throw NumericError("infer: frame " + std::to_string(t) + " decoded to non-finite values");
    traj.frames.push_back(norm.transform.invert(pred));
  }
  return traj;
}

FrameSequence load_frames(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("frames directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.size() < 2) throw IoError(dir.string() + ": need at least 2 png frames");
  FrameSequence seq;
  for (const auto& f : files) seq.images.push_back(toydata::read_png(f));
  for (const auto& img : seq.images)
    if (!img.same_shape(seq.images.front())) throw IoError(dir.string() + ": frames differ in size");
  const fs::path cam = dir / "camera.txt";
  if (fs::exists(cam)) {
    seq.camera = toydata::read_cameras(cam).at(0);
  } else {
    seq.camera = toydata::default_cameras(seq.images.front().width, seq.images.front().height).front();
  }
  return seq;
}

void write_step_log(const fs::path& path, const std::vector<StepRecord>& steps, const std::vector<EvalRecord>& evals) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& s : steps)
    out << kv::format_record({{"step", std::to_string(s.step)},
                              {"lr", kv::format_double(s.lr)},
                              {"loss", kv::format_double(s.loss)},
                              {"deformation", kv::format_double(s.deformation)},
                              {"kl", kv::format_double(s.kl)}})
        << '\n';
  for (const auto& e : evals)
    out << kv::format_record({{"eval_step", std::to_string(e.step)}, {"chamfer", kv::format_double(e.chamfer)}}) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace meshmotion::runner
