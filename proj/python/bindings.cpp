#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "meshmotion/diffusion/edm.hpp"
#include "meshmotion/errors.hpp"
#include "meshmotion/eval/metrics.hpp"
#include "meshmotion/geom/io.hpp"
#include "meshmotion/geom/metrics.hpp"
#include "meshmotion/geom/sampling.hpp"
#include "meshmotion/runner/pipeline.hpp"

namespace py = pybind11;
using namespace meshmotion;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

toydata::Image to_image(const Array& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw std::invalid_argument("expected an H x W x 3 array");
  toydata::Image img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  const double* src = a.data();
  for (size_t i = 0; i < img.rgb.size(); ++i) img.rgb[i] = static_cast<float>(src[i]);
  return img;
}

runner::Trajectory to_trajectory(const Array& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw std::invalid_argument("expected a T x N x 3 array");
  runner::Trajectory t;
  const auto frames = a.shape(0), n = a.shape(1);
  const double* src = a.data();
  for (py::ssize_t f = 0; f < frames; ++f) {
    geom::Points p(n, 3);
    std::copy(src + f * n * 3, src + (f + 1) * n * 3, p.data());
    t.frames.push_back(std::move(p));
  }
  return t;
}

Array from_trajectory(const runner::Trajectory& t) {
  Array out({static_cast<py::ssize_t>(t.frame_count()), static_cast<py::ssize_t>(t.point_count()), py::ssize_t{3}});
  double* dst = out.mutable_data();
  for (const auto& f : t.frames) dst = std::copy(f.data(), f.data() + f.size(), dst);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Mesh animation from monocular video via latent motion diffusion";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("farthest_point_sample", [](const geom::Points& p, int count, int seed_index) {
          return geom::farthest_point_sample(p, count, seed_index);
        }, py::arg("points"), py::arg("count"), py::arg("seed_index") = 0);
  m.def("chamfer_distance", [](const geom::Points& a, const geom::Points& b) { return geom::chamfer_distance(a, b); },
        py::arg("a"), py::arg("b"));

  m.def("psnr", [](const Array& a, const Array& b, double max_value) {
          return eval::psnr(to_image(a), to_image(b), max_value);
        }, py::arg("a"), py::arg("b"), py::arg("max_value") = 1.0);
  m.def("ssim", [](const Array& a, const Array& b) { return eval::ssim(to_image(a), to_image(b)); }, py::arg("a"),
        py::arg("b"));
  m.attr("PSNR_CAP") = eval::kPsnrCap;

  m.def("refine_trajectory", [](const Array& traj, double delta) {
          return from_trajectory(runner::refine_trajectory(to_trajectory(traj), delta));
        }, py::arg("trajectory"), py::arg("delta"));
  m.def("save_trajectory", [](const std::filesystem::path& path, const Array& traj) {
          runner::save_trajectory(path, to_trajectory(traj));
        }, py::arg("path"), py::arg("trajectory"));
  m.def("load_trajectory", [](const std::filesystem::path& path) { return from_trajectory(runner::load_trajectory(path)); },
        py::arg("path"));

  m.def("edm_precondition", [](double sigma, double sigma_data) {
          const auto n = diffusion::edm_precondition(sigma, sigma_data);
          py::dict d;
          d["c_skip"] = n.c_skip;
          d["c_out"] = n.c_out;
          d["c_in"] = n.c_in;
          d["c_noise"] = n.c_noise;
          return d;
        }, py::arg("sigma"), py::arg("sigma_data") = 0.5);
  m.def("edm_weight", &diffusion::edm_weight, py::arg("sigma"), py::arg("sigma_data") = 0.5);
  m.def("karras_schedule", &diffusion::karras_schedule, py::arg("steps"), py::arg("sigma_min") = 0.002,
        py::arg("sigma_max") = 80.0, py::arg("rho") = 7.0);

  m.def("synthesize_dataset", [](const std::filesystem::path& out, int count, uint64_t seed, int points) {
          auto cfg = toydata::DatasetConfig::mixed(count, seed);
          cfg.points = points;
          return toydata::build_dataset(cfg, out).pass_count();
        }, py::arg("out_dir"), py::arg("count") = 8, py::arg("seed") = 0, py::arg("points") = 512,
        "Writes the procedural toy dataset and returns the number of assets that passed the filters.");
  m.def("load_vertex_frames", [](const std::filesystem::path& dataset, const std::string& id) {
          const auto rec = toydata::load_record(dataset, id);
          runner::Trajectory t;
          t.frames = rec.vertex_frames;
          return from_trajectory(t);
        }, py::arg("dataset_dir"), py::arg("asset_id"));

  m.def("infer", [](const std::filesystem::path& mesh, const std::filesystem::path& frames_dir,
                    const std::filesystem::path& vae_ckpt, const std::filesystem::path& diffusion_ckpt, int steps,
                    uint64_t seed) {
          const auto vae_model = vae::VaeModel<float>::from_checkpoint(nn::Checkpoint::load(vae_ckpt));
          const auto diff_model = diffusion::DiffusionModel<float>::from_checkpoint(nn::Checkpoint::load(diffusion_ckpt));
          const auto obj = geom::read_obj(mesh);
          const auto seq = runner::load_frames(frames_dir);
          const int n = steps > 0 ? steps : diff_model.config().sampler_steps;
          runner::Trajectory traj;
          {
            py::gil_scoped_release release;
            traj = runner::infer(obj.mesh, seq.images, seq.camera, vae_model, diff_model, n, seed);
          }
          return from_trajectory(traj);
        }, py::arg("mesh"), py::arg("frames_dir"), py::arg("vae_checkpoint"), py::arg("diffusion_checkpoint"),
        py::arg("steps") = 0, py::arg("seed") = 0);
}
