#include "meshmotion/vae/config.hpp"

#include <stdexcept>
#include <string>

#include "meshmotion/errors.hpp"

namespace meshmotion::vae {

void VaeConfig::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("vae config: ") + what);
  };
  need(points >= 1, "points must be positive");
  need(latents >= 1, "latents must be positive");
  need(latents <= points, "latents must not exceed points");
  need(width >= 4 && width % 4 == 0, "width must be a multiple of 4");
  need(heads >= 1 && width % heads == 0, "width must be divisible by heads");
  need((width / 2) % heads == 0, "width/2 must be divisible by heads");
  need(latent_channels >= 1, "latent_channels must be positive");
  need(depth >= 0 && vit_depth >= 0 && fusion_depth >= 0, "depths must be non-negative");
  need(patch >= 1, "patch must be positive");
  need(mlp_ratio >= 1, "mlp_ratio must be positive");
  need(lambda >= 0.0 && mse_weight >= 0.0 && kl_weight >= 0.0, "loss weights must be non-negative");
  need(lambda > 0.0 || mse_weight > 0.0, "at least one deformation term must be weighted");
  need(train_queries >= 0, "train_queries must be non-negative");
}

VaeConfig VaeConfig::desk() { return {}; }

VaeConfig VaeConfig::full() {
  VaeConfig c;
  c.points = 2048;
  c.latents = 512;
  c.width = 512;
  c.latent_channels = 32;
  c.depth = 4;
  c.heads = 8;
  c.patch = 16;
  c.vit_depth = 12;
  return c;
}

VaeConfig VaeConfig::from_document(const kv::Document& doc, const VaeConfig& base) {
  const kv::Document d = doc.section("vae.");
  VaeConfig c = base;
  if (auto preset = d.get("preset")) {
    if (*preset == "desk") c = desk();
    else if (*preset == "full") c = full();
    else throw ConfigError("vae.preset must be 'desk' or 'full'");
  }
  auto as_int = [&](const char* key, int fallback) { return static_cast<int>(d.get_long(key, fallback)); };
  c.points = as_int("points", c.points);
  c.latents = as_int("latents", c.latents);
  c.width = as_int("width", c.width);
  c.latent_channels = as_int("latent_channels", c.latent_channels);
  c.depth = as_int("depth", c.depth);
  c.heads = as_int("heads", c.heads);
  c.patch = as_int("patch", c.patch);
  c.vit_depth = as_int("vit_depth", c.vit_depth);
  c.fusion_depth = as_int("fusion_depth", c.fusion_depth);
  c.mlp_ratio = as_int("mlp_ratio", c.mlp_ratio);
  c.lambda = d.get_double("lambda", c.lambda);
  c.mse_weight = d.get_double("mse_weight", c.mse_weight);
  c.kl_weight = d.get_double("kl_weight", c.kl_weight);
  c.train_queries = as_int("train_queries", c.train_queries);
  c.seed = static_cast<uint64_t>(d.get_long("seed", static_cast<long>(c.seed)));
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

void VaeConfig::write_to(kv::Document& doc) const {
  doc.set("vae.points", points);
  doc.set("vae.latents", latents);
  doc.set("vae.width", width);
  doc.set("vae.latent_channels", latent_channels);
  doc.set("vae.depth", depth);
  doc.set("vae.heads", heads);
  doc.set("vae.patch", patch);
  doc.set("vae.vit_depth", vit_depth);
  doc.set("vae.fusion_depth", fusion_depth);
  doc.set("vae.mlp_ratio", mlp_ratio);
  doc.set("vae.lambda", lambda);
  doc.set("vae.mse_weight", mse_weight);
  doc.set("vae.kl_weight", kl_weight);
  doc.set("vae.train_queries", train_queries);
  doc.set("vae.seed", static_cast<long>(seed));
}

}  // namespace meshmotion::vae
