#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "meshmotion/errors.hpp"
#include "meshmotion/eval/report.hpp"
#include "meshmotion/geom/io.hpp"
#include "meshmotion/runner/pipeline.hpp"
#include "meshmotion/toydata/dataset.hpp"

namespace fs = std::filesystem;
using namespace meshmotion;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<uint64_t> seed;
};

kv::Document load_document(const Common& c) {
  kv::Document doc;
  if (!c.config.empty()) {
    if (!fs::exists(c.config)) throw ConfigError("config file not found: " + c.config);
    doc = kv::Document::read_file(c.config);
  }
  for (const auto& o : c.overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + o + "'");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t"), e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    doc.set(trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
  }
  if (c.seed) {
    doc.set("run.seed", static_cast<long>(*c.seed));
    doc.set("data.seed", static_cast<long>(*c.seed));
  }
  return doc;
}

runner::RunConfig load_run_config(const Common& c) { return runner::RunConfig::from_document(load_document(c)); }

void split_dataset(const runner::RunConfig& cfg, std::vector<toydata::DatasetRecord>& train,
                   std::vector<toydata::DatasetRecord>& val) {
  if (cfg.dataset.empty()) throw ConfigError("no dataset given (use --dataset or run.dataset)");
  train = toydata::load_dataset(cfg.dataset);
  if (cfg.val_assets > 0) {
    if (static_cast<size_t>(cfg.val_assets) >= train.size())
      throw ConfigError("run.val_assets leaves no training assets");
    val.assign(std::make_move_iterator(train.end() - cfg.val_assets), std::make_move_iterator(train.end()));
    train.resize(train.size() - static_cast<size_t>(cfg.val_assets));
  }
}

std::map<std::string, runner::Trajectory> load_predictions(const fs::path& dir,
                                                          const std::vector<toydata::DatasetRecord>& truth) {
  std::map<std::string, runner::Trajectory> out;
  for (const auto& r : truth) {
    for (const fs::path& p : {dir / (r.id + ".trj"), dir / r.id / "trajectory.trj"})
      if (fs::exists(p)) {
        out.emplace(r.id, runner::load_trajectory(p));
        break;
      }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"meshmotion: animate a static mesh from a frame sequence with latent diffusion"};
  app.require_subcommand(1);
  app.footer(
      "Exit codes: 0 success, 1 validation or usage error, 2 runtime failure.\n"
      "Environment: MESHMOTION_SEED supplies --seed when the flag is absent.\n"
      "Config files hold `section.key = value` lines; --set key=value overrides entries.");

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config, "Key-value config file");
    sub->add_option("--set", common.overrides, "Override a config entry (key=value), repeatable");
    sub->add_option("--seed", common.seed, "Seed for every stochastic component")->envname("MESHMOTION_SEED");
  };

  std::string out, dataset, vae_ckpt, diff_ckpt, mesh_path, frames_dir, traj_in, predictions, report_path, ablation;
  std::optional<int> count, steps;
  std::optional<double> delta;
  std::vector<uint64_t> seeds{0, 1, 2};
  bool static_baseline = false;

  auto* synth = app.add_subcommand("synth-data", "Generate, render and filter the procedural toy dataset");
  add_common(synth);
  synth->add_option("-o,--out", out, "Dataset directory")->required();
  synth->add_option("--count", count, "Number of assets (data.count)");

  auto* train_vae = app.add_subcommand("train-vae", "Train the motion VAE");
  add_common(train_vae);
  train_vae->add_option("-d,--dataset", dataset, "Dataset directory (run.dataset)");
  train_vae->add_option("-o,--out", out, "Output directory (run.output)");

  auto* train_diff = app.add_subcommand("train-diff", "Train the latent diffusion model on cached VAE latents");
  add_common(train_diff);
  train_diff->add_option("-d,--dataset", dataset, "Dataset directory (run.dataset)");
  train_diff->add_option("-o,--out", out, "Output directory (run.output)");
  train_diff->add_option("--vae", vae_ckpt, "VAE checkpoint")->required();

  auto* infer = app.add_subcommand("infer", "Generate a vertex trajectory for a mesh and a frame sequence");
  add_common(infer);
  infer->add_option("-m,--mesh", mesh_path, "Input OBJ mesh")->required();
  infer->add_option("-f,--frames", frames_dir, "Directory of PNG frames (optional camera.txt)")->required();
  infer->add_option("--vae", vae_ckpt, "VAE checkpoint")->required();
  infer->add_option("--diffusion", diff_ckpt, "Diffusion checkpoint")->required();
  infer->add_option("-o,--out", out, "Output trajectory file")->required();
  infer->add_option("--steps", steps, "Sampler steps");
  infer->add_option("--delta", delta, "Apply refinement with this threshold");

  auto* refine = app.add_subcommand("refine", "Suppress sub-threshold jitter in a trajectory");
  add_common(refine);
  refine->add_option("-i,--in", traj_in, "Input trajectory")->required();
  refine->add_option("-o,--out", out, "Output trajectory")->required();
  refine->add_option("--delta", delta, "Threshold in scene units (run.delta)");

  auto* drive = app.add_subcommand("drive", "Apply a trajectory to a mesh and export per-frame OBJ files");
  add_common(drive);
  drive->add_option("-m,--mesh", mesh_path, "Input OBJ mesh")->required();
  drive->add_option("-t,--traj", traj_in, "Trajectory file")->required();
  drive->add_option("-o,--out", out, "Output directory")->required();

  auto* evaluate = app.add_subcommand("eval", "Score predicted trajectories or run a loss/latent ablation");
  add_common(evaluate);
  evaluate->add_option("-d,--dataset", dataset, "Ground-truth dataset directory")->required();
  evaluate->add_option("-p,--predictions", predictions, "Directory with <id>.trj or <id>/trajectory.trj");
  evaluate->add_flag("--static", static_baseline, "Score the frame-0-everywhere baseline");
  evaluate->add_option("--ablation", ablation, "Run an ablation grid: loss or latent")
      ->check(CLI::IsMember({"loss", "latent"}));
  evaluate->add_option("--seeds", seeds, "Seeds for the ablation grid");
  evaluate->add_option("-r,--report", report_path, "Report output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    const auto subs = app.get_subcommands();
    std::cerr << (subs.empty() ? app.help() : subs.front()->help());
    return 1;
  }

  try {
    if (synth->parsed()) {
      kv::Document doc = load_document(common);
      if (count) doc.set("data.count", static_cast<long>(*count));
      const toydata::DatasetConfig cfg = toydata::DatasetConfig::from_document(doc);
      const toydata::Manifest m = toydata::build_dataset(cfg, out);
      std::cout << "wrote " << m.entries.size() << " assets to " << out << ", " << m.pass_count() << " passed\n";
    } else if (train_vae->parsed()) {
      kv::Document doc = load_document(common);
      if (!dataset.empty()) doc.set("run.dataset", dataset);
      if (!out.empty()) doc.set("run.output", out);
      const runner::RunConfig cfg = runner::RunConfig::from_document(doc);
      std::vector<toydata::DatasetRecord> train, val;
      split_dataset(cfg, train, val);
      fs::create_directories(cfg.output);
      std::ofstream log(cfg.output / "vae_train.log");
      const runner::VaeRun run = runner::train_vae(cfg, train, val, &log);
      run.model.to_checkpoint().save(cfg.output / "vae.ckpt");
      runner::write_step_log(cfg.output / "vae_metrics.txt", run.steps, run.evals);
      std::cout << "vae: best chamfer " << run.best_chamfer << " at step " << run.best_step << " (identity "
                << run.baseline_chamfer << "), saved " << (cfg.output / "vae.ckpt").string() << "\n";
    } else if (train_diff->parsed()) {
      kv::Document doc = load_document(common);
      if (!dataset.empty()) doc.set("run.dataset", dataset);
      if (!out.empty()) doc.set("run.output", out);
      const runner::RunConfig cfg = runner::RunConfig::from_document(doc);
      const auto vae_model = vae::VaeModel<float>::from_checkpoint(nn::Checkpoint::load(vae_ckpt));
      std::vector<toydata::DatasetRecord> train, val;
      split_dataset(cfg, train, val);
      fs::create_directories(cfg.output);
      std::ofstream log(cfg.output / "diffusion_train.log");
      const runner::DiffusionRun run =
          runner::train_diffusion(cfg, vae_model, train, cfg.output / "latents.cache", &log);
      run.model.to_checkpoint().save(cfg.output / "diffusion.ckpt");
      runner::write_step_log(cfg.output / "diffusion_metrics.txt", run.steps);
      std::cout << "diffusion: " << run.steps.size() << " steps, final loss "
                << (run.steps.empty() ? 0.0 : run.steps.back().loss) << ", saved "
                << (cfg.output / "diffusion.ckpt").string() << "\n";
    } else if (infer->parsed()) {
      const runner::RunConfig cfg = load_run_config(common);
      const auto vae_model = vae::VaeModel<float>::from_checkpoint(nn::Checkpoint::load(vae_ckpt));
      const auto diff_model = diffusion::DiffusionModel<float>::from_checkpoint(nn::Checkpoint::load(diff_ckpt));
      const geom::ObjData obj = geom::read_obj(mesh_path);
      const runner::FrameSequence frames = runner::load_frames(frames_dir);
      const int n_steps = steps ? *steps : (cfg.sampler_steps > 0 ? cfg.sampler_steps : diff_model.config().sampler_steps);
      runner::Trajectory traj =
          runner::infer(obj.mesh, frames.images, frames.camera, vae_model, diff_model, n_steps, cfg.seed);
      if (delta) traj = runner::refine_trajectory(traj, *delta);
      runner::save_trajectory(out, traj);
      std::cout << "wrote " << traj.frame_count() << " frames x " << traj.point_count() << " points to " << out << "\n";
    } else if (refine->parsed()) {
      const runner::RunConfig cfg = load_run_config(common);
      const double d = delta ? *delta : cfg.delta;
      if (d < 0.0) throw ConfigError("--delta must be non-negative");
      const runner::Trajectory traj = runner::refine_trajectory(runner::load_trajectory(traj_in), d);
      runner::save_trajectory(out, traj);
      std::cout << "refined " << traj.frame_count() << " frames into " << out << "\n";
    } else if (drive->parsed()) {
      load_document(common);
      const geom::ObjData obj = geom::read_obj(mesh_path);
      const runner::Trajectory traj = runner::load_trajectory(traj_in);
      runner::export_animation(out, obj.mesh, traj, obj.colors ? &*obj.colors : nullptr);
      std::cout << "exported " << traj.frame_count() << " frames to " << out << "\n";
    } else if (evaluate->parsed()) {
      const kv::Document doc = load_document(common);
      const auto truth = toydata::load_dataset(dataset);
      eval::EvalReport report;
      if (!ablation.empty()) {
        const runner::RunConfig cfg = runner::RunConfig::from_document(doc);
        const auto cases = ablation == "loss" ? eval::loss_ablation_cases() : eval::latent_size_ablation_cases();
        report.ablation = eval::run_ablation(cfg, cases, seeds, truth);
        for (const auto& r : eval::ablation_means(report.ablation)) report.ablation.push_back({r.name + " (mean)", 0, r.psnr, r.chamfer});
        for (const auto& r : ablation == "loss" ? eval::reference_loss_rows() : eval::reference_latent_rows())
          report.ablation.push_back({"reference " + r.name, 0, r.psnr, r.chamfer});
        report.config = doc;
      } else {
        if (!static_baseline && predictions.empty()) throw ConfigError("eval needs --predictions, --static or --ablation");
        const auto preds = static_baseline ? eval::static_predictions(truth) : load_predictions(predictions, truth);
        report = eval::evaluate_run(preds, truth);
        report.config = doc;
      }
      std::cout << report.table();
      if (!report_path.empty()) report.write(report_path);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
