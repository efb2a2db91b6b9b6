#include "meshmotion/diffusion/config.hpp"

#include <stdexcept>
#include <string>

#include "meshmotion/errors.hpp"

namespace meshmotion::diffusion {

void DiffusionConfig::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("diffusion config: ") + what);
  };
  need(latents >= 1 && latent_channels >= 1, "latent shape must be positive");
  need(width >= 4 && width % 4 == 0, "width must be a multiple of 4");
  need(heads >= 1 && width % heads == 0, "width must be divisible by heads");
  need(depth >= 0 && frame_depth >= 0, "depths must be non-negative");
  need(mlp_ratio >= 1, "mlp_ratio must be positive");
  need(geometry_tokens >= 1, "geometry_tokens must be positive");
  need(patch >= 1, "patch must be positive");
  need(sigma_data > 0.0, "sigma_data must be positive");
  need(sigma_min > 0.0 && sigma_min < sigma_max, "need 0 < sigma_min < sigma_max");
  need(rho > 0.0, "rho must be positive");
  need(sampler_steps >= 2, "sampler_steps must be at least 2");
  need(p_std > 0.0, "p_std must be positive");
  need(subset_divisor >= 1, "subset_divisor must be positive");
  need(latent_scale > 0.0, "latent_scale must be positive");
}

DiffusionConfig DiffusionConfig::from_document(const kv::Document& doc) { return from_document(doc, DiffusionConfig{}); }

DiffusionConfig DiffusionConfig::from_document(const kv::Document& doc, const DiffusionConfig& base) {
  const kv::Document d = doc.section("diffusion.");
  DiffusionConfig c = base;
  auto as_int = [&](const char* key, int fallback) { return static_cast<int>(d.get_long(key, fallback)); };
  c.latents = as_int("latents", c.latents);
  c.latent_channels = as_int("latent_channels", c.latent_channels);
  c.width = as_int("width", c.width);
  c.depth = as_int("depth", c.depth);
  c.heads = as_int("heads", c.heads);
  c.mlp_ratio = as_int("mlp_ratio", c.mlp_ratio);
  c.geometry_tokens = as_int("geometry_tokens", c.geometry_tokens);
  c.patch = as_int("patch", c.patch);
  c.frame_depth = as_int("frame_depth", c.frame_depth);
  c.sigma_data = d.get_double("sigma_data", c.sigma_data);
  c.sigma_min = d.get_double("sigma_min", c.sigma_min);
  c.sigma_max = d.get_double("sigma_max", c.sigma_max);
  c.rho = d.get_double("rho", c.rho);
  c.sampler_steps = as_int("sampler_steps", c.sampler_steps);
  c.p_mean = d.get_double("p_mean", c.p_mean);
  c.p_std = d.get_double("p_std", c.p_std);
  c.subset_divisor = as_int("subset_divisor", c.subset_divisor);
  c.latent_scale = d.get_double("latent_scale", c.latent_scale);
  c.seed = static_cast<uint64_t>(d.get_long("seed", static_cast<long>(c.seed)));
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

void DiffusionConfig::write_to(kv::Document& doc) const {
  doc.set("diffusion.latents", latents);
  doc.set("diffusion.latent_channels", latent_channels);
  doc.set("diffusion.width", width);
  doc.set("diffusion.depth", depth);
  doc.set("diffusion.heads", heads);
  doc.set("diffusion.mlp_ratio", mlp_ratio);
  doc.set("diffusion.geometry_tokens", geometry_tokens);
  doc.set("diffusion.patch", patch);
  doc.set("diffusion.frame_depth", frame_depth);
  doc.set("diffusion.sigma_data", sigma_data);
  doc.set("diffusion.sigma_min", sigma_min);
  doc.set("diffusion.sigma_max", sigma_max);
  doc.set("diffusion.rho", rho);
  doc.set("diffusion.sampler_steps", sampler_steps);
  doc.set("diffusion.p_mean", p_mean);
  doc.set("diffusion.p_std", p_std);
  doc.set("diffusion.subset_divisor", subset_divisor);
  doc.set("diffusion.latent_scale", latent_scale);
  doc.set("diffusion.seed", static_cast<long>(seed));
}

}  // namespace meshmotion::diffusion
