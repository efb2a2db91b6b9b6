#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "meshmotion/diffusion/train.hpp"
#include "meshmotion/errors.hpp"
#include "meshmotion/toydata/dataset.hpp"

using namespace meshmotion;
using namespace meshmotion::diffusion;
using Md = nn::Matrix<double>;

namespace {

Md random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Md m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

DiffusionConfig tiny_config() {
  DiffusionConfig c;
  c.latents = 4;
  c.latent_channels = 3;
  c.width = 16;
  c.depth = 1;
  c.heads = 2;
  c.mlp_ratio = 2;
  c.geometry_tokens = 6;
  c.patch = 8;
  c.frame_depth = 1;
  c.seed = 5;
  return c;
}

template <class T>
void jitter_parameters(nn::ParameterStore<T>& store, std::mt19937_64& rng, double amount = 0.1) {
  std::normal_distribution<double> n(0.0, amount);
  for (auto& p : store.params())
    for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] += static_cast<T>(n(rng));
}

struct Clip {
  toydata::DatasetRecord record;
  vae::GeometryInput<double> geometry;
  std::vector<vae::ImageInput<double>> images;

  explicit Clip(int frames = 4) {
    toydata::DatasetConfig cfg;
    auto params = toydata::AssetParams::defaults(toydata::AssetKind::Twist);
    params.max_step = 1.0;
    cfg.assets = {{toydata::AssetKind::Twist, params, 2}};
    cfg.frames = frames;
    cfg.width = cfg.height = 16;
    cfg.points = 40;
    record = toydata::make_record(cfg.assets[0], 0, cfg);
    geometry = vae::make_geometry_input<double>(record.point_frames[0], tiny_config().geometry_tokens);
    for (const auto& v : record.views) images.push_back(vae::make_image_input<double>(v, 8, {0}));
  }

  std::vector<const vae::ImageInput<double>*> frame_ptrs() const {
    std::vector<const vae::ImageInput<double>*> out;
    for (const auto& i : images) out.push_back(&i);
    return out;
  }
};

Md run_network(const DiffusionModel<double>& model, const Clip& clip, const Md& x, double c_noise,
               const BlockMask& mask = {}) {
  nn::Tape<double> tape(false);
  const auto cond = model.condition(tape, clip.geometry, clip.frame_ptrs());
  return model.network(tape.constant(x), c_noise, cond, mask).value();
}

}  // namespace

TEST_CASE("edm preconditioners: limits, midpoint and identity") {
  const double sd = 0.5;
  const NoiseLevel tiny = edm_precondition(1e-8, sd);
  CHECK(tiny.c_skip == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(tiny.c_out) < 1e-6);
  CHECK(edm_precondition(sd, sd).c_skip == 0.5);
  const NoiseLevel one = edm_precondition(1.0, sd);
  CHECK(one.c_noise == 0.0);
  CHECK(one.c_out == doctest::Approx(0.5 / std::sqrt(1.25)).epsilon(1e-15));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> log_sigma(std::log(1e-3), std::log(100.0));
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double s = std::exp(log_sigma(rng));
    const NoiseLevel n = edm_precondition(s, sd);
    worst = std::max(worst, std::abs(n.c_in * n.c_in * (s * s + sd * sd) - 1.0));
  }
  CHECK(worst < 1e-12);
  CHECK_THROWS_AS(edm_precondition(0.0, sd), std::invalid_argument);
  CHECK_THROWS_AS(edm_precondition(-1.0, sd), std::invalid_argument);
  CHECK(edm_weight(1.0, 0.5) == doctest::Approx(1.25 / 0.25).epsilon(1e-15));
}

TEST_CASE("karras schedule, subsets and frame pairing") {
  const auto s = karras_schedule(18, 0.002, 80.0, 7.0);
  REQUIRE(s.size() == 18);
  CHECK(s.front() == 80.0);
  CHECK(s.back() == 0.002);
  for (size_t i = 1; i < s.size(); ++i) CHECK(s[i] < s[i - 1]);
  // Midpoint of a 3-level schedule in σ^(1/ρ) space.
  const auto three = karras_schedule(3, 0.002, 80.0, 7.0);
  const double mid = std::pow(0.5 * (std::pow(80.0, 1 / 7.0) + std::pow(0.002, 1 / 7.0)), 7.0);
  CHECK(three[1] == doctest::Approx(mid).epsilon(1e-12));
  CHECK_THROWS_AS(karras_schedule(1, 0.002, 80.0, 7.0), std::invalid_argument);
  CHECK_THROWS_AS(karras_schedule(4, 1.0, 0.5, 7.0), std::invalid_argument);

  CHECK(subset_size(10, 3) == 4);
  CHECK(subset_size(9, 3) == 3);
  CHECK(subset_size(3, 3) == 1);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const auto sub = sample_subset(10, 4, rng);
    REQUIRE(sub.size() == 4);
    for (size_t k = 1; k < sub.size(); ++k) CHECK(sub[k] > sub[k - 1]);
    CHECK(sub.front() >= 0);
    CHECK(sub.back() < 10);
  }

  std::vector<int> identity(6);
  std::iota(identity.begin(), identity.end(), 0);
  CHECK(nearest_frame_pairing(6, 6) == identity);
  // 4 frames spread over 7 slots: slot s maps to round(s/2).
  CHECK(nearest_frame_pairing(4, 7) == std::vector<int>{0, 1, 1, 2, 2, 3, 3});
  CHECK(nearest_frame_pairing(10, 2) == std::vector<int>{0, 9});
}

TEST_CASE("edm wrapper: stub inversion and small-sigma limit") {
  std::mt19937_64 rng(4);
  const Md clean = random_matrix(6, 3, rng), noisy = random_matrix(6, 3, rng);
  for (double sigma : {0.01, 0.5, 3.0, 80.0}) {
    const NoiseLevel n = edm_precondition(sigma, 0.5);
    nn::Tape<double> tape;
    const Network<double> stub = [&](nn::Var<double>, double) {
      return tape.constant(((clean - n.c_skip * noisy) / n.c_out).eval());
    };
    const Md d = edm_denoise<double>(tape.constant(noisy), sigma, 0.5, stub).value();
    CHECK((d - clean).cwiseAbs().maxCoeff() < 1e-12);
  }

  const Clip clip;
  DiffusionModel<double> model(tiny_config());
  jitter_parameters(model.store(), rng, 0.3);
  const Md x = random_matrix(4 * 4, 3, rng);
  nn::Tape<double> tape(false);
  const auto cond = model.condition(tape, clip.geometry, clip.frame_ptrs());
  const Md d = model.denoise(tape.constant(x), 1e-8, cond).value();
  CHECK((d - x).norm() / x.norm() < 1e-5);
  CHECK(d.rows() == x.rows());
  CHECK(d.cols() == x.cols());
}

TEST_CASE("edm loss: oracle zero, non-negative, hand recomputation") {
  std::mt19937_64 rng(6);
  const Md clean = random_matrix(5, 2, rng), noise = random_matrix(5, 2, rng, 0.7);
  {
    const double sigma = 0.7;
    const NoiseLevel n = edm_precondition(sigma, 0.5);
    nn::Tape<double> tape;
    const Network<double> oracle = [&](nn::Var<double>, double) {
      return tape.constant(((clean - n.c_skip * (clean + noise)) / n.c_out).eval());
    };
    CHECK(std::abs(edm_loss<double>(tape, clean, noise, sigma, 0.5, oracle).value()(0, 0)) < 1e-20);
  }

  const Clip clip;
  DiffusionConfig cfg = tiny_config();
  DiffusionModel<double> model(cfg);
  jitter_parameters(model.store(), rng);
  const Md latents = random_matrix(4 * 4, 3, rng);
  DiffusionSample<double> sample{&clip.geometry, clip.frame_ptrs(), &latents};
  for (int trial = 0; trial < 10; ++trial) {
    const NoiseDraw<double> draw = draw_noise<double>(cfg, 4, rng);
    REQUIRE(draw.subset.size() == 2);
    nn::Tape<double> tape;
    const double loss = diffusion_loss(tape, model, sample, draw).value()(0, 0);
    CHECK(loss >= 0.0);

    // Independent recomputation of the weighted MSE of the wrapper output.
    const NoiseLevel n = edm_precondition(draw.sigma, cfg.sigma_data);
    const Md sub = select_frames(latents, cfg.latents, draw.subset);
    const Md noisy = sub + draw.noise;
    std::vector<const vae::ImageInput<double>*> frames;
    for (int t : draw.subset) frames.push_back(&clip.images[static_cast<size_t>(t)]);
    nn::Tape<double> t2(false);
    const auto cond = model.condition(t2, clip.geometry, frames);
    const Md f = model.network(t2.constant((n.c_in * noisy).eval()), n.c_noise, cond).value();
    const Md d = n.c_skip * noisy + n.c_out * f;
    const double lambda = (draw.sigma * draw.sigma + 0.25) / (draw.sigma * draw.sigma * 0.25);
    const double expected = lambda * (d - sub).squaredNorm() / static_cast<double>(sub.size());
    CHECK(loss == doctest::Approx(expected).epsilon(1e-9));
  }

  Clip short_clip(2);
  std::vector<const vae::ImageInput<double>*> two{&short_clip.images[0], &short_clip.images[1]};
  const Md lat2 = random_matrix(8, 3, rng);
  DiffusionSample<double> bad{&short_clip.geometry, two, &lat2};
  nn::Tape<double> tape;
  CHECK_THROWS_AS(diffusion_training_loss(tape, model, bad, rng), std::invalid_argument);
}

TEST_CASE("edm loss gradient on a two-parameter network matches finite differences") {
  std::mt19937_64 rng(8);
  DiffusionConfig cfg;
  cfg.latents = 3;
  cfg.latent_channels = 1;
  nn::ParameterStore<double> store;
  auto& a = store.add("a", Md::Constant(1, 1, 0.8));
  auto& b = store.add("b", Md::Constant(1, 1, -0.3));
  const Md clean = random_matrix(27, 1, rng);

  for (int trial = 0; trial < 20; ++trial) {
    const NoiseDraw<double> draw = draw_noise<double>(cfg, 9, rng);
    const Md sub = select_frames(clean, cfg.latents, draw.subset);
    auto eval = [&](bool grad) {
      nn::Tape<double> tape;
      const Network<double> f = [&](nn::Var<double> x, double) {
        return nn::linear(x, tape.parameter(a), tape.parameter(b));
      };
      const nn::Var<double> loss = edm_loss<double>(tape, sub, draw.noise, draw.sigma, cfg.sigma_data, f);
      if (grad) tape.backward(loss);
      return loss.value()(0, 0);
    };
    store.zero_grad();
    eval(true);
    for (auto* p : {&a, &b}) {
      const double analytic = p->grad(0, 0);
      const double h = 1e-6, v = p->value(0, 0);
      p->value(0, 0) = v + h;
      const double up = eval(false);
      p->value(0, 0) = v - h;
      const double down = eval(false);
      p->value(0, 0) = v;
      const double numeric = (up - down) / (2 * h);
      CHECK(std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric)) < 1e-3);
    }
  }
}

TEST_CASE("heun sampler at two steps equals a hand-unrolled update") {
  const double smin = 0.002, smax = 80.0;
  const auto sigmas = karras_schedule(2, smin, smax, 7.0);
  const Denoiser stub = [](const Md& x, double sigma) { return (x * (0.6 / (1.0 + sigma))).eval(); };
  const Md out = heun_sample(stub, 3, 2, sigmas, 42);

  std::mt19937_64 rng(42);
  std::normal_distribution<double> normal(0.0, 1.0);
  Md x(3, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = smax * normal(rng);
  auto D = [](const Md& v, double s) { return (v * (0.6 / (1.0 + s))).eval(); };
  const Md d0 = (x - D(x, smax)) / smax;
  const Md x_euler = x + (smin - smax) * d0;
  const Md d1 = (x_euler - D(x_euler, smin)) / smin;
  const Md x1 = x + (smin - smax) * 0.5 * (d0 + d1);
  const Md x2 = x1 + (0.0 - smin) * ((x1 - D(x1, smin)) / smin);
  CHECK((out - x2).cwiseAbs().maxCoeff() < 1e-9);

  CHECK(heun_sample(stub, 3, 2, sigmas, 42) == out);
  CHECK(heun_sample(stub, 3, 2, sigmas, 43) != out);
}

TEST_CASE("denoiser shape, zero-initialized head and timestamp validation") {
  const Clip clip;
  DiffusionModel<double> model(tiny_config());
  std::mt19937_64 rng(9);
  const Md x = random_matrix(16, 3, rng);
  const Md f = run_network(model, clip, x, 0.1);
  CHECK(f.rows() == 16);
  CHECK(f.cols() == 3);
  CHECK(f.cwiseAbs().maxCoeff() == 0.0);

  nn::Tape<double> tape(false);
  const auto cond = model.condition(tape, clip.geometry, clip.frame_ptrs());
  CHECK_THROWS_AS(model.network(tape.constant(random_matrix(12, 3, rng)), 0.0, cond), std::invalid_argument);
  CHECK_THROWS_AS(model.network(tape.constant(random_matrix(16, 2, rng)), 0.0, cond), std::invalid_argument);
}

TEST_CASE("denoiser structure: row equivariance, temporal locality, frame sensitivity") {
  const Clip clip;
  DiffusionModel<double> model(tiny_config());
  std::mt19937_64 rng(10);
  jitter_parameters(model.store(), rng, 0.3);
  const int T = 4, M = 4;
  const Md x = random_matrix(T * M, 3, rng);

  // Same token permutation inside every timestamp.
  const std::vector<int> perm{2, 0, 3, 1};
  Md xp(x.rows(), x.cols());
  for (int t = 0; t < T; ++t)
    for (int m = 0; m < M; ++m) xp.row(t * M + m) = x.row(t * M + perm[static_cast<size_t>(m)]);
  const Md f = run_network(model, clip, x, 0.2), fp = run_network(model, clip, xp, 0.2);
  double worst = 0.0;
  for (int t = 0; t < T; ++t)
    for (int m = 0; m < M; ++m)
      worst = std::max(worst, (fp.row(t * M + m) - f.row(t * M + perm[static_cast<size_t>(m)])).cwiseAbs().maxCoeff());
  CHECK(worst < 1e-10);

  // Without spatial attention, changing token row 1 in every timestamp leaves the other rows untouched.
  BlockMask no_spatial;
  no_spatial.spatial = false;
  Md x2 = x;
  for (int t = 0; t < T; ++t) x2.row(t * M + 1) += random_matrix(1, 3, rng);
  const Md g = run_network(model, clip, x, 0.2, no_spatial), g2 = run_network(model, clip, x2, 0.2, no_spatial);
  for (int t = 0; t < T; ++t)
    for (int m = 0; m < M; ++m) {
      const double diff = (g.row(t * M + m) - g2.row(t * M + m)).cwiseAbs().maxCoeff();
      if (m == 1) CHECK(diff > 1e-6);
      else CHECK(diff < 1e-12);
    }

  // Changing one frame's image alters that timestamp's prediction.
  Clip other = clip;
  other.images[2].patches.array() += 0.5;
  const Md h = run_network(model, other, x, 0.2);
  CHECK((h.middleRows(2 * M, M) - f.middleRows(2 * M, M)).norm() > 1e-6);
}

TEST_CASE("sampling and training are deterministic; checkpoints round trip") {
  const Clip clip;
  DiffusionConfig cfg = tiny_config();
  cfg.latent_scale = 2.0;
  DiffusionModel<double> model(cfg);
  std::mt19937_64 rng(12);
  jitter_parameters(model.store(), rng);
  const Md a = sample_latents(model, clip.geometry, clip.frame_ptrs(), 4, 7);
  const Md b = sample_latents(model, clip.geometry, clip.frame_ptrs(), 4, 7);
  CHECK(a.rows() == 16);
  CHECK(a.cols() == 3);
  CHECK(a == b);
  CHECK(a.allFinite());
  CHECK_THROWS_AS(sample_latents(model, clip.geometry, clip.frame_ptrs(), 1, 7), std::invalid_argument);

  const Md latents = random_matrix(16, 3, rng, 0.5);
  auto run = [&](int steps) {
    DiffusionModel<double> m(cfg);
    nn::Adam<double> adam(m.store());
    std::mt19937_64 r(99);
    std::vector<double> losses;
    DiffusionSample<double> s{&clip.geometry, clip.frame_ptrs(), &latents};
    for (int i = 0; i < steps; ++i) losses.push_back(diffusion_training_step(m, adam, {s, s}, 1e-3, r));
    return losses;
  };
  const auto l1 = run(5), l2 = run(5);
  CHECK(l1 == l2);
  for (double l : l1) CHECK(std::isfinite(l));

  // Checkpoints hold float32 tensors, so the round trip is exact for float models.
  DiffusionModel<float> fmodel(cfg);
  jitter_parameters(fmodel.store(), rng);
  const nn::Checkpoint ck = fmodel.to_checkpoint();
  CHECK(ck.tag == "diffusion");
  const auto path = std::filesystem::temp_directory_path() / "meshmotion_diffusion_ck.bin";
  ck.save(path);
  const DiffusionModel<float> back = DiffusionModel<float>::from_checkpoint(nn::Checkpoint::load(path));
  std::filesystem::remove(path);
  CHECK(back.config().latent_scale == 2.0);
  const auto& pa = fmodel.store().params();
  const auto& pb = back.store().params();
  REQUIRE(pa.size() == pb.size());
  for (size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->value == pb[i]->value);
  nn::Checkpoint wrong = ck;
  wrong.tag = "vae";
  CHECK_THROWS_AS(DiffusionModel<float>::from_checkpoint(wrong), ConfigError);
}

TEST_CASE("diffusion config from key-value documents") {
  kv::Document doc;
  doc.set("diffusion.depth", 2);
  doc.set("diffusion.sigma_max", 40.0);
  const DiffusionConfig c = DiffusionConfig::from_document(doc);
  CHECK(c.depth == 2);
  CHECK(c.sigma_max == 40.0);
  CHECK(c.sigma_data == 0.5);
  kv::Document round;
  c.write_to(round);
  const DiffusionConfig c2 = DiffusionConfig::from_document(round);
  CHECK(c2.depth == 2);
  CHECK(c2.sampler_steps == c.sampler_steps);
  doc.set("diffusion.sigma_min", 50.0);
  CHECK_THROWS_AS(DiffusionConfig::from_document(doc), ConfigError);
  doc.set("diffusion.sigma_min", 0.002);
  doc.set("diffusion.sampler_steps", 1);
  CHECK_THROWS_AS(DiffusionConfig::from_document(doc), ConfigError);
}
