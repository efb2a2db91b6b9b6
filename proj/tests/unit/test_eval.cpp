#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "meshmotion/eval/metrics.hpp"
#include "meshmotion/eval/report.hpp"
#include "meshmotion/geom/metrics.hpp"

using namespace meshmotion;
using toydata::Image;

namespace {

Image random_image(int w, int h, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Image img(w, h);
  for (auto& v : img.rgb) v = u(rng);
  return img;
}

std::vector<toydata::DatasetRecord> records(int count) {
  toydata::DatasetConfig dc = toydata::DatasetConfig::mixed(count + 4, 3);
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

TEST_CASE("psnr: identical images hit the cap") {
  std::mt19937_64 rng(0);
  const Image a = random_image(16, 16, rng);
  CHECK(eval::psnr(a, a) == eval::kPsnrCap);
}

TEST_CASE("psnr: uniform 10/255 error on the 8-bit range") {
  Image a(8, 8, 100.0f), b(8, 8, 110.0f);
  CHECK(eval::psnr(a, b, 255.0) == doctest::Approx(10.0 * std::log10(255.0 * 255.0 / 100.0)).epsilon(1e-12));
  CHECK(eval::psnr(a, b, 255.0) == doctest::Approx(28.13).epsilon(1e-3));
}

TEST_CASE("psnr: matches a scalar recomputation on random pairs") {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 20; ++k) {
    const Image a = random_image(13, 9, rng), b = random_image(13, 9, rng);
    double mse = 0.0;
    for (size_t i = 0; i < a.rgb.size(); ++i) {
      const double d = static_cast<double>(a.rgb[i]) - static_cast<double>(b.rgb[i]);
      mse += d * d;
    }
    mse /= static_cast<double>(a.rgb.size());
    CHECK(std::abs(eval::psnr(a, b) - 10.0 * std::log10(1.0 / mse)) < 1e-9);
  }
}

TEST_CASE("psnr: strictly decreasing in the noise amplitude") {
  std::mt19937_64 rng(2);
  const Image base = random_image(32, 32, rng);
  std::vector<int> signs(base.rgb.size());
  std::bernoulli_distribution coin(0.5);
  for (auto& s : signs) s = coin(rng) ? 1 : -1;
  double prev = eval::kPsnrCap + 1.0;
  for (int amp : {1, 2, 4, 8}) {
    Image noisy = base;
    for (size_t i = 0; i < noisy.rgb.size(); ++i) noisy.rgb[i] += static_cast<float>(signs[i] * amp / 255.0);
    const double p = eval::psnr(base, noisy);
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("psnr: invalid inputs") {
  CHECK_THROWS_AS(eval::psnr(Image(4, 4), Image(4, 5)), std::invalid_argument);
  CHECK_THROWS_AS(eval::psnr(Image(4, 4), Image(4, 4), 0.0), std::invalid_argument);
}

TEST_CASE("ssim: identity, symmetry and range") {
  std::mt19937_64 rng(3);
  const Image a = random_image(24, 20, rng), b = random_image(24, 20, rng);
  CHECK(eval::ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(eval::ssim(a, b) - eval::ssim(b, a)) < 1e-9);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (int k = 0; k < 10000; ++k) {
    Image x(11, 11), y(11, 11);
    const float bias = u(rng);
    for (size_t i = 0; i < x.rgb.size(); ++i) {
      x.rgb[i] = u(rng);
      y.rgb[i] = k % 2 ? 1.0f - x.rgb[i] : bias * u(rng);
    }
    const double s = eval::ssim(x, y);
    REQUIRE(s >= -1.0);
    REQUIRE(s <= 1.0);
  }
}

TEST_CASE("ssim: constant images follow the zero-variance closed form") {
  const double c1 = 0.01 * 0.01;
  for (double m : {0.2, 0.5, 0.8}) {
    const Image a(16, 16, static_cast<float>(m)), b(16, 16, static_cast<float>(m + 0.1));
    const double ma = static_cast<float>(m), mb = static_cast<float>(m + 0.1);
    const double expected = (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1);
    CHECK(eval::ssim(a, b) == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("ssim: too-small or mismatched images") {
  CHECK_THROWS_AS(eval::ssim(Image(10, 10), Image(10, 10)), std::invalid_argument);
  CHECK_THROWS_AS(eval::ssim(Image(12, 12), Image(12, 13)), std::invalid_argument);
}

TEST_CASE("evaluate_run: ground truth against itself") {
  const auto truth = records(2);
  const eval::EvalReport r = eval::evaluate_run(eval::truth_predictions(truth), truth);
  REQUIRE(r.assets.size() == 2u);
  for (const auto& a : r.assets) {
    CHECK(a.psnr == eval::kPsnrCap);
    CHECK(a.ssim == 1.0);
    CHECK(a.chamfer == 0.0);
  }
  CHECK(r.aggregate.psnr == eval::kPsnrCap);
  CHECK(r.aggregate.ssim == 1.0);
  CHECK(r.aggregate.chamfer == 0.0);
}

TEST_CASE("evaluate_run: static baseline chamfer equals the direct computation") {
  const auto truth = records(3);
  const eval::EvalReport r = eval::evaluate_run(eval::static_predictions(truth), truth);
  REQUIRE(r.assets.size() == truth.size());
  for (size_t i = 0; i < truth.size(); ++i) {
    const auto& v = truth[i].vertex_frames;
    double cd = 0.0;
    for (size_t t = 1; t < v.size(); ++t) cd += geom::chamfer_distance(v.front(), v[t]);
    cd /= static_cast<double>(v.size() - 1);
    CHECK(r.assets[i].id == truth[i].id);
    CHECK(r.assets[i].chamfer == doctest::Approx(cd).epsilon(1e-12));
    CHECK(r.assets[i].psnr < eval::kPsnrCap);
  }
  double mean = 0.0;
  for (const auto& a : r.assets) mean += a.psnr;
  CHECK(std::abs(r.aggregate.psnr - mean / static_cast<double>(r.assets.size())) < 1e-9);
}

TEST_CASE("evaluate_run: id mismatches are listed") {
  const auto truth = records(2);
  auto preds = eval::truth_predictions(truth);
  preds.erase(truth[1].id);
  preds["ghost"] = preds.begin()->second;
  try {
    eval::evaluate_run(preds, truth);
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find(truth[1].id) != std::string::npos);
    CHECK(msg.find("ghost") != std::string::npos);
  }
}

TEST_CASE("report: aggregate is the row mean and the file holds records and a table") {
  eval::EvalReport r;
  r.assets = {{"a", 20.0, 0.5, 0.1}, {"b", 30.0, 0.9, 0.3}, {"c", 25.0, 0.7, 0.2}};
  r.recompute_aggregate();
  CHECK(std::abs(r.aggregate.psnr - 25.0) < 1e-9);
  CHECK(std::abs(r.aggregate.ssim - 0.7) < 1e-9);
  CHECK(std::abs(r.aggregate.chamfer - 0.2) < 1e-9);
  r.config.set("run.delta", 0.01);
  r.ablation.push_back({"mse", 1, 21.5, 0.04});

  const auto path = std::filesystem::temp_directory_path() / "meshmotion_report.txt";
  r.write(path);
  std::ifstream in(path);
  const std::string text((std::istreambuf_iterator<char>(in)), {});
  CHECK(text.find("kind=aggregate") != std::string::npos);
  CHECK(text.find("kind=ablation") != std::string::npos);
  CHECK(text.find("run.delta") != std::string::npos);
  CHECK(text.find("LPIPS not computed") != std::string::npos);
}

TEST_CASE("reference ablation rows") {
  const auto loss = eval::reference_loss_rows();
  REQUIRE(loss.size() == 3u);
  CHECK(loss[0].psnr == doctest::Approx(23.131));
  CHECK(loss[0].chamfer == doctest::Approx(0.030));
  CHECK(loss[1].psnr == doctest::Approx(23.739));
  CHECK(loss[1].chamfer == doctest::Approx(0.023));
  CHECK(loss[2].psnr == doctest::Approx(24.046));
  CHECK(loss[2].chamfer == doctest::Approx(0.019));

  const auto latent = eval::reference_latent_rows();
  REQUIRE(latent.size() == 6u);
  const double psnr[] = {22.366, 22.897, 23.417, 23.335, 23.852, 24.046};
  const double cd[] = {0.039, 0.031, 0.025, 0.026, 0.021, 0.019};
  for (size_t i = 0; i < 6; ++i) {
    CHECK(latent[i].psnr == doctest::Approx(psnr[i]));
    CHECK(latent[i].chamfer == doctest::Approx(cd[i]));
  }
}

TEST_CASE("ablation cases change only their knob") {
  const runner::RunConfig base = runner::RunConfig::desk();
  const auto cases = eval::loss_ablation_cases();
  REQUIRE(cases.size() == 3u);
  runner::RunConfig c[3] = {base, base, base};
  for (int i = 0; i < 3; ++i) cases[i].apply(c[i]);
  CHECK(c[0].vae.mse_weight == 1.0);
  CHECK(c[0].vae.lambda == 0.0);
  CHECK(c[1].vae.mse_weight == 0.0);
  CHECK(c[1].vae.lambda == doctest::Approx(0.1));
  CHECK(c[2].vae.mse_weight == 1.0);
  CHECK(c[2].vae.lambda == doctest::Approx(0.1));
  for (auto& x : c) CHECK(x.vae.latent_channels == base.vae.latent_channels);

  const auto sizes = eval::latent_size_ablation_cases();
  REQUIRE(sizes.size() == 3u);
  const int expected[] = {8, 16, 32};
  for (int i = 0; i < 3; ++i) {
    runner::RunConfig x = base;
    sizes[i].apply(x);
    CHECK(x.vae.latent_channels == expected[i]);
    CHECK(x.vae.width == base.vae.width);
  }
}

TEST_CASE("run_ablation: one row per case and seed, means per case") {
  runner::RunConfig cfg = runner::RunConfig::desk();
  cfg.vae.points = 64;
  cfg.vae.latents = 8;
  cfg.vae.width = 32;
  cfg.vae.latent_channels = 8;
  cfg.vae.depth = 1;
  cfg.vae.heads = 2;
  cfg.vae.train_queries = 0;
  cfg.vae_train.max_steps = 3;
  cfg.vae_train.batch = 2;
  cfg.vae_train.eval_every = 0;
  const auto truth = records(1);
  const auto rows = eval::run_ablation(cfg, eval::loss_ablation_cases(), {0, 1}, truth);
  REQUIRE(rows.size() == 6u);
  for (const auto& r : rows) {
    CHECK(std::isfinite(r.psnr));
    CHECK(r.chamfer >= 0.0);
  }
  const auto means = eval::ablation_means(rows);
  REQUIRE(means.size() == 3u);
  for (size_t k = 0; k < 3; ++k) {
    double cd = 0.0;
    int n = 0;
    for (const auto& r : rows)
      if (r.name == means[k].name) {
        cd += r.chamfer;
        ++n;
      }
    CHECK(n == 2);
    CHECK(std::abs(means[k].chamfer - cd / n) < 1e-12);
  }
}
