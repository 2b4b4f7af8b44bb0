// Python bindings for the b2m core. Arrays cross the boundary as float64
// numpy arrays; configs and run results as plain dicts.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "b2m/config.hpp"
#include "b2m/error.hpp"
#include "b2m/losses.hpp"
#include "b2m/memory_task.hpp"
#include "b2m/scene.hpp"
#include "b2m/spikes.hpp"
#include "b2m/stats.hpp"
#include "b2m/sweep.hpp"
#include "b2m/training.hpp"

namespace py = pybind11;
using namespace b2m;
using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

namespace {

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json from_python(const py::handle& obj) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

std::vector<double> flat(const Array& a) { return {a.data(), a.data() + a.size()}; }

std::pair<std::size_t, std::size_t> matrix_shape(const Array& a, const char* name) {
  if (a.ndim() != 2) throw ShapeError(std::string(name) + " must be 2-d");
  return {static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1))};
}

ExperimentConfig config_from(const py::object& cfg) {
  if (cfg.is_none()) return ExperimentConfig::defaults(TaskKind::memory);
  return ExperimentConfig::from_json(from_python(cfg));
}

double contrastive(const Array& teacher, const Array& model, double tau) {
  const auto [b, e] = matrix_shape(teacher, "teacher");
  const auto [mb, me] = matrix_shape(model, "model");
  return contrastive_transfer_loss(EmbeddingBatch::teacher(b, e, flat(teacher)),
                                   EmbeddingBatch::model(ad::Tensor::constant({mb, me}, flat(model))),
                                   tau)
      .item();
}

double latent(const Array& model, const Array& teacher) {
  const auto [b, e] = matrix_shape(teacher, "teacher");
  const auto [mb, me] = matrix_shape(model, "model");
  return latent_transfer_loss(EmbeddingBatch::model(ad::Tensor::constant({mb, me}, flat(model))),
                              EmbeddingBatch::teacher(b, e, flat(teacher)))
      .item();
}

py::dict episode(std::uint64_t seed, std::size_t length) {
  Rng rng(seed);
  const auto ep = memory::generate_episode(rng, length);
  std::vector<int> targets, actions;
  std::vector<bool> switched;
  for (const auto& r : memory::rollout(ep)) {
    targets.push_back(r.target);
    actions.push_back(r.action == memory::Action::accept ? 1 : 0);
    switched.push_back(r.switched);
  }
  py::dict d;
  d["stimuli"] = ep.stimuli;
  d["target_pair"] = std::vector<int>{ep.target_pair[0], ep.target_pair[1]};
  d["distractor"] = ep.distractor;
  d["targets"] = targets;
  d["accept"] = actions;
  d["switched"] = switched;
  return d;
}

Array scenes(std::uint64_t seed, std::size_t n, const std::string& split, std::size_t width,
             std::size_t height) {
  Rng rng(seed);
  const scene::ImageDims dims{width, height, 1};
  const auto ds = scene::sample_dataset(rng, n, scene::split_from_string(split), dims);
  Array out({n, height, width});
  std::copy(ds.pixels.begin(), ds.pixels.end(), out.mutable_data());
  return out;
}

py::dict run_single(const py::object& cfg, double alpha, const std::string& teacher,
                    std::uint64_t seed) {
  const ExperimentConfig c = config_from(cfg);
  c.validate();
  const RunSpec spec{alpha, alpha == 0.0 ? TeacherMode::none : teacher_mode_from_string(teacher),
                     seed};
  RunResult r;
  {
    py::gil_scoped_release release;
    if (c.task == TaskKind::memory) {
      r = train_memory_run(c, spec, prepare_memory_data(c.memory, {spec.teacher}));
    } else {
      r = train_scene_run(c, spec, prepare_scene_data(c.scene));
    }
  }
  return to_python(r.to_json());
}

std::string sweep(const py::object& cfg, const std::string& out) {
  ExperimentConfig c = config_from(cfg);
  c.out_dir = out;
  SweepResult result;
  {
    py::gil_scoped_release release;
    result = run_sweep(c);
    write_sweep(result, out);
  }
  return format_report(result);
}

}  // namespace

PYBIND11_MODULE(_b2m, m) {
  m.doc() = "teacher-embedding transfer experiments";

  auto base = py::register_exception<Error>(m, "B2mError", PyExc_RuntimeError);
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  m.def("contrastive_loss", &contrastive, py::arg("teacher"), py::arg("model"),
        py::arg("tau") = 0.1, "Contrastive transfer loss summed over teacher anchors.");
  m.def("latent_loss", &latent, py::arg("model"), py::arg("teacher"),
        "Mean squared error between model and teacher embeddings.");
  m.def(
      "combined_loss",
      [](double task, double transfer, double alpha) {
        return combined_loss(ad::Tensor::scalar(task), ad::Tensor::scalar(transfer), alpha).item();
      },
      py::arg("task"), py::arg("transfer"), py::arg("alpha"));

  m.def(
      "rank_sum_test",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        const auto r = rank_sum_test(a, b);
        py::dict d;
        d["u"] = r.u;
        d["p_value"] = r.p_value;
        d["exact"] = r.exact;
        return d;
      },
      py::arg("a"), py::arg("b"), "One-sided Mann-Whitney test that a exceeds b.");
  m.def("detect_divergence", &detect_divergence, py::arg("test_losses"));
  m.def("epochs_to_convergence", &epochs_to_convergence, py::arg("metric"),
        py::arg("higher_is_better"));

  m.def(
      "filter_kernel",
      [] {
        const auto& k = memory::exp_filter_kernel();
        return std::vector<double>(k.begin(), k.end());
      });
  m.def(
      "exp_filter", [](const std::vector<double>& rates) { return memory::exp_filter(rates); },
      py::arg("rates"));

  m.def("memory_episode", &episode, py::arg("seed"), py::arg("length") = 26,
        "Random episode and its oracle rollout.");
  m.def("scenes", &scenes, py::arg("seed"), py::arg("n"), py::arg("split") = "A",
        py::arg("width") = 32, py::arg("height") = 16, "n x height x width rendered scenes.");

  m.def(
      "default_config", [](const std::string& task) {
        return to_python(ExperimentConfig::defaults(task == "scene" ? TaskKind::scene
                                                                    : TaskKind::memory)
                             .to_json());
      },
      py::arg("task") = "memory");
  m.def(
      "load_config",
      [](const std::string& path) { return to_python(ExperimentConfig::load(path).to_json()); },
      py::arg("path"));
  m.def(
      "config_fingerprint", [](const py::object& cfg) { return config_from(cfg).fingerprint(); },
      py::arg("config"));

  m.def("run", &run_single, py::arg("config"), py::arg("alpha") = 0.0,
        py::arg("teacher") = "oracle", py::arg("seed") = 1,
        "Train one run and return its result dict.");
  m.def("sweep", &sweep, py::arg("config"), py::arg("out"),
        "Run a sweep, write its output directory and return the report text.");
}
