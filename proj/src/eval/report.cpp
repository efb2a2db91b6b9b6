#include "meshmotion/eval/report.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "meshmotion/errors.hpp"
#include "meshmotion/eval/metrics.hpp"
#include "meshmotion/geom/metrics.hpp"
#include "meshmotion/runner/pipeline.hpp"
#include "meshmotion/toydata/render.hpp"

namespace meshmotion::eval {

void EvalReport::recompute_aggregate() {
  aggregate = AssetMetrics{"mean", 0.0, 0.0, 0.0};
  if (assets.empty()) return;
  for (const auto& a : assets) {
    aggregate.psnr += a.psnr;
    aggregate.ssim += a.ssim;
    aggregate.chamfer += a.chamfer;
  }
  const double n = static_cast<double>(assets.size());
  aggregate.psnr /= n;
  aggregate.ssim /= n;
  aggregate.chamfer /= n;
}

std::string EvalReport::table() const {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-16s %10s %8s %10s\n", "asset", "PSNR", "SSIM", "CD");
  out << line;
  auto row = [&](const AssetMetrics& m) {
    std::snprintf(line, sizeof(line), "%-16s %10.3f %8.4f %10.5f\n", m.id.c_str(), m.psnr, m.ssim, m.chamfer);
    out << line;
  };
  for (const auto& a : assets) row(a);
  row(aggregate);
  out << "(LPIPS not computed)\n";
  if (!ablation.empty()) {
    std::snprintf(line, sizeof(line), "\n%-24s %6s %10s %10s\n", "case", "seed", "PSNR", "CD");
    out << line;
    for (const auto& r : ablation) {
      std::snprintf(line, sizeof(line), "%-24s %6llu %10.3f %10.5f\n", r.name.c_str(),
                    static_cast<unsigned long long>(r.seed), r.psnr, r.chamfer);
      out << line;
    }
  }
  return out.str();
}

void EvalReport::write(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report " + path.string());
  auto metric_record = [](const std::string& kind, const AssetMetrics& m) {
    return kv::format_record({{"kind", kind},
                              {"id", m.id},
                              {"psnr", kv::format_double(m.psnr)},
                              {"ssim", kv::format_double(m.ssim)},
                              {"chamfer", kv::format_double(m.chamfer)}});
  };
  for (const auto& a : assets) out << metric_record("asset", a) << '\n';
  out << metric_record("aggregate", aggregate) << '\n';
  for (const auto& r : ablation)
    out << kv::format_record({{"kind", "ablation"},
                              {"case", r.name},
                              {"seed", std::to_string(r.seed)},
                              {"psnr", kv::format_double(r.psnr)},
                              {"chamfer", kv::format_double(r.chamfer)}})
        << '\n';
  for (const auto& [k, v] : config.entries()) out << kv::format_record({{"kind", "config"}, {"key", k}, {"value", v}}) << '\n';
  std::istringstream table_lines(table());
  for (std::string l; std::getline(table_lines, l);) out << "# " << l << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

EvalReport evaluate_run(const std::map<std::string, runner::Trajectory>& predictions,
                        const std::vector<toydata::DatasetRecord>& truth) {
  std::set<std::string> truth_ids;
  for (const auto& r : truth) truth_ids.insert(r.id);
  std::string missing, extra;
  for (const auto& id : truth_ids)
    if (!predictions.count(id)) missing += (missing.empty() ? "" : ", ") + id;
  for (const auto& [id, traj] : predictions)
    if (!truth_ids.count(id)) extra += (extra.empty() ? "" : ", ") + id;
  if (!missing.empty() || !extra.empty())
    throw std::invalid_argument("evaluate_run: id mismatch; missing predictions [" + missing + "], unknown ids [" + extra + "]");

  EvalReport report;
  for (const auto& r : truth) {
    const runner::Trajectory& traj = predictions.at(r.id);
    traj.validate();
    if (traj.frame_count() != r.frame_count())
      throw std::invalid_argument(r.id + ": prediction has " + std::to_string(traj.frame_count()) + " frames, truth has " +
                                  std::to_string(r.frame_count()));
    if (traj.point_count() != r.rest_mesh.vertex_count())
      throw std::invalid_argument(r.id + ": prediction point count differs from the mesh vertex count");
    AssetMetrics m{r.id, 0.0, 0.0, 0.0};
    const int frames = r.frame_count();
    for (int t = 1; t < frames; ++t) {
      const auto& gt_view = r.views[static_cast<size_t>(t)];
      const toydata::MultiViewFrame pred = toydata::render_views(traj.frames[static_cast<size_t>(t)], r.rest_mesh.faces,
                                                                 r.colors, gt_view.cameras, t);
      double p = 0.0, s = 0.0;
      for (size_t v = 0; v < gt_view.images.size(); ++v) {
        const toydata::Image img = toydata::quantize8(pred.images[v]);
        p += psnr(img, gt_view.images[v]);
        s += ssim(img, gt_view.images[v]);
      }
      const double nv = static_cast<double>(gt_view.images.size());
      m.psnr += p / nv;
      m.ssim += s / nv;
      m.chamfer += geom::chamfer_distance(traj.frames[static_cast<size_t>(t)], r.vertex_frames[static_cast<size_t>(t)]);
    }
    const double n = static_cast<double>(std::max(1, frames - 1));
    m.psnr /= n;
    m.ssim /= n;
    m.chamfer /= n;
    report.assets.push_back(m);
  }
  report.recompute_aggregate();
  return report;
}

std::map<std::string, runner::Trajectory> static_predictions(const std::vector<toydata::DatasetRecord>& truth) {
  std::map<std::string, runner::Trajectory> out;
  for (const auto& r : truth) {
    runner::Trajectory t;
    t.frames.assign(r.vertex_frames.size(), r.vertex_frames.front());
    out.emplace(r.id, std::move(t));
  }
  return out;
}

std::map<std::string, runner::Trajectory> truth_predictions(const std::vector<toydata::DatasetRecord>& truth) {
  std::map<std::string, runner::Trajectory> out;
  for (const auto& r : truth) out.emplace(r.id, runner::Trajectory{r.vertex_frames});
  return out;
}

std::vector<AblationCase> loss_ablation_cases() {
  return {
      {"mse", [](runner::RunConfig& c) { c.vae.mse_weight = 1.0; c.vae.lambda = 0.0; }},
      {"dis", [](runner::RunConfig& c) { c.vae.mse_weight = 0.0; c.vae.lambda = 0.1; }},
      {"mse+dis", [](runner::RunConfig& c) { c.vae.mse_weight = 1.0; c.vae.lambda = 0.1; }},
  };
}

std::vector<AblationCase> latent_size_ablation_cases() {
  std::vector<AblationCase> out;
  for (int c0 : {8, 16, 32})
    out.push_back({"c0=" + std::to_string(c0), [c0](runner::RunConfig& c) {
                     c.vae.latent_channels = c0;
                     c.diffusion.latent_channels = c0;
                   }});
  return out;
}

std::vector<AblationRow> reference_loss_rows() {
  return {{"#1 mse", 0, 23.131, 0.030}, {"#2 dis", 0, 23.739, 0.023}, {"#3 mse+dis", 0, 24.046, 0.019}};
}

std::vector<AblationRow> reference_latent_rows() {
  return {{"C=128 C0=8", 0, 22.366, 0.039}, {"C=128 C0=16", 0, 22.897, 0.031}, {"C=128 C0=32", 0, 23.417, 0.025},
          {"C=512 C0=8", 0, 23.335, 0.026}, {"C=512 C0=16", 0, 23.852, 0.021}, {"C=512 C0=32", 0, 24.046, 0.019}};
}

std::vector<AblationRow> run_ablation(const runner::RunConfig& base, const std::vector<AblationCase>& cases,
                                      const std::vector<uint64_t>& seeds,
                                      const std::vector<toydata::DatasetRecord>& records) {
  std::vector<AblationRow> rows;
  for (const auto& c : cases)
    for (uint64_t seed : seeds) {
      runner::RunConfig cfg = base;
      cfg.apply_seed(seed);
      c.apply(cfg);
      cfg.validate();
      const runner::VaeRun run = runner::train_vae(cfg, records, {});
      const auto assets = runner::prepare_assets(records, cfg);
      std::map<std::string, runner::Trajectory> preds;
      for (const auto& a : assets) {
        runner::Trajectory traj;
        const auto& rest = a.record->rest_mesh.vertices;
        traj.frames.push_back(rest);
        for (int t = 1; t < a.frame_count(); ++t) {
          const auto z = run.model.encode(a.vae_geometry, a.views[static_cast<size_t>(t)], nullptr);
          traj.frames.push_back(run.model.decode(z.mu, rest).cast<double>());
        }
        preds.emplace(a.record->id, std::move(traj));
      }
      const EvalReport r = evaluate_run(preds, records);
      rows.push_back({c.name, seed, r.aggregate.psnr, r.aggregate.chamfer});
    }
  return rows;
}

std::vector<AblationRow> ablation_means(const std::vector<AblationRow>& rows) {
  std::vector<AblationRow> out;
  std::vector<int> counts;
  for (const auto& r : rows) {
    size_t i = 0;
    while (i < out.size() && out[i].name != r.name) ++i;
    if (i == out.size()) {
      out.push_back({r.name, 0, 0.0, 0.0});
      counts.push_back(0);
    }
    out[i].psnr += r.psnr;
    out[i].chamfer += r.chamfer;
    ++counts[i];
  }
  for (size_t i = 0; i < out.size(); ++i) {
    out[i].psnr /= counts[i];
    out[i].chamfer /= counts[i];
  }
  return out;
}

}  // namespace meshmotion::eval
