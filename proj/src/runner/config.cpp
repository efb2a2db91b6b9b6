#include "meshmotion/runner/config.hpp"

#include <stdexcept>
#include <string>

#include "meshmotion/errors.hpp"

namespace meshmotion::runner {

void OptimizerSettings::validate(const char* which) const {
  auto need = [&](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string(which) + ": " + what);
  };
  need(lr >= 0.0 && lr_floor >= 0.0, "learning rates must be non-negative");
  need(warmup >= 0, "warmup must be non-negative");
  need(batch >= 1, "batch size must be positive");
  need(epochs >= 0 && max_steps >= 0, "epochs and max_steps must be non-negative");
  need(clip_norm >= 0.0, "clip_norm must be non-negative");
  need(eval_every >= 0 && log_every >= 1, "bad logging interval");
}

void RunConfig::validate() const {
  if (!(delta >= 0.0)) throw std::invalid_argument("run: delta must be non-negative");
  if (val_assets < 0) throw std::invalid_argument("run: val_assets must be non-negative");
  if (sampler_steps != 0 && sampler_steps < 2) throw std::invalid_argument("run: sampler_steps must be 0 or at least 2");
  vae.validate();
  diffusion.validate();
  vae_train.validate("vae_train");
  diffusion_train.validate("diffusion_train");
}

RunConfig RunConfig::desk() {
  RunConfig c;
  c.vae.points = 512;
  c.vae.latents = 32;
  c.vae.width = 64;
  c.vae.latent_channels = 32;
  c.vae.depth = 2;
  c.vae.heads = 4;
  c.vae.patch = 16;
  c.vae.vit_depth = 1;
  c.vae.fusion_depth = 1;
  c.vae.train_queries = 256;
  c.diffusion.latents = 32;
  c.diffusion.latent_channels = 32;
  c.diffusion.width = 64;
  c.diffusion.depth = 2;
  c.diffusion.heads = 4;
  c.diffusion.geometry_tokens = 32;
  c.diffusion.patch = 16;
  c.vae_train.epochs = 250;
  c.diffusion_train.epochs = 200;
  c.diffusion_train.eval_every = 0;
  return c;
}

namespace {

OptimizerSettings read_optimizer(const kv::Document& d, OptimizerSettings o) {
  auto as_int = [&](const char* key, int fallback) { return static_cast<int>(d.get_long(key, fallback)); };
  o.lr = d.get_double("lr", o.lr);
  o.lr_floor = d.get_double("lr_floor", o.lr_floor);
  o.warmup = as_int("warmup", o.warmup);
  o.batch = as_int("batch", o.batch);
  o.epochs = as_int("epochs", o.epochs);
  o.max_steps = as_int("max_steps", o.max_steps);
  o.clip_norm = d.get_double("clip_norm", o.clip_norm);
  o.eval_every = as_int("eval_every", o.eval_every);
  o.log_every = as_int("log_every", o.log_every);
  return o;
}

void write_optimizer(kv::Document& doc, const std::string& prefix, const OptimizerSettings& o) {
  doc.set(prefix + "lr", o.lr);
  doc.set(prefix + "lr_floor", o.lr_floor);
  doc.set(prefix + "warmup", o.warmup);
  doc.set(prefix + "batch", o.batch);
  doc.set(prefix + "epochs", o.epochs);
  doc.set(prefix + "max_steps", o.max_steps);
  doc.set(prefix + "clip_norm", o.clip_norm);
  doc.set(prefix + "eval_every", o.eval_every);
  doc.set(prefix + "log_every", o.log_every);
}

}  // namespace

RunConfig RunConfig::from_document(const kv::Document& doc) { return from_document(doc, desk()); }

RunConfig RunConfig::from_document(const kv::Document& doc, const RunConfig& base) {
  RunConfig c = base;
  const kv::Document run = doc.section("run.");
  if (auto v = run.get("dataset")) c.dataset = *v;
  if (auto v = run.get("output")) c.output = *v;
  c.delta = run.get_double("delta", c.delta);
  c.val_assets = static_cast<int>(run.get_long("val_assets", c.val_assets));
  c.sampler_steps = static_cast<int>(run.get_long("sampler_steps", c.sampler_steps));
  c.vae = vae::VaeConfig::from_document(doc, c.vae);
  c.diffusion = diffusion::DiffusionConfig::from_document(doc, c.diffusion);
  c.vae_train = read_optimizer(doc.section("vae_train."), c.vae_train);
  c.diffusion_train = read_optimizer(doc.section("diffusion_train."), c.diffusion_train);
  if (auto v = run.get("seed")) c.apply_seed(static_cast<uint64_t>(kv::parse_long(*v, "run.seed")));
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

void RunConfig::write_to(kv::Document& doc) const {
  doc.set("run.dataset", dataset.string());
  doc.set("run.output", output.string());
  doc.set("run.delta", delta);
  doc.set("run.val_assets", val_assets);
  doc.set("run.sampler_steps", sampler_steps);
  doc.set("run.seed", static_cast<long>(seed));
  vae.write_to(doc);
  diffusion.write_to(doc);
  write_optimizer(doc, "vae_train.", vae_train);
  write_optimizer(doc, "diffusion_train.", diffusion_train);
}

void RunConfig::apply_seed(uint64_t value) {
  seed = value;
  vae.seed = value;
  diffusion.seed = value ^ 0x5bd1e995u;
}

}  // namespace meshmotion::runner
