// b2m command-line front end: single runs, sweeps and reports.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "b2m/checkpoint.hpp"
#include "b2m/config.hpp"
#include "b2m/error.hpp"
#include "b2m/scene.hpp"
#include "b2m/sweep.hpp"
#include "b2m/training.hpp"

namespace fs = std::filesystem;
using namespace b2m;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::optional<std::string> teacher;
  std::optional<std::string> out;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> threads;
  std::size_t panels = 0;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "JSON config file");
  cmd->add_option("--seed", o.seed, "seed (single runs; restricts a sweep to one seed)");
  cmd->add_option("--alpha", o.alpha, "transfer weight in [0, 1]");
  cmd->add_option("--teacher", o.teacher, "oracle | eeg | spike-pca | noise | none");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--epochs", o.epochs, "training epochs");
  cmd->add_flag("--quiet", o.quiet, "no progress output");
}

int fail(const std::string& kind, const std::string& message, int code) {
  std::cerr << "error: " << nlohmann::json{{"kind", kind}, {"message", message}}.dump() << '\n';
  return code;
}

ExperimentConfig build_config(TaskKind task, const Options& o) {
  ExperimentConfig c = ExperimentConfig::defaults(task);
  if (!o.config.empty()) {
    c = ExperimentConfig::load(o.config);
    if (c.task != task) {
      throw ConfigError("config key 'task' is \"" + to_string(c.task) + "\" but the command needs \"" +
                        to_string(task) + "\"");
    }
  }
  if (o.epochs) c.epochs = *o.epochs;
  if (o.out) c.out_dir = *o.out;
  if (o.threads) c.threads = *o.threads;
  if (o.alpha) c.alphas = {*o.alpha};
  if (o.seed) c.seeds = {*o.seed};
  if (o.teacher) c.teachers = {teacher_mode_from_string(*o.teacher)};
  c.validate();
  return c;
}

RunSpec single_spec(const ExperimentConfig& c, const Options& o) {
  RunSpec spec;
  spec.alpha = o.alpha ? *o.alpha : 0.0;
  spec.seed = o.seed ? *o.seed : c.seeds.front();
  spec.teacher = spec.alpha == 0.0 ? TeacherMode::none : c.teachers.front();
  if (o.teacher) spec.teacher = teacher_mode_from_string(*o.teacher);
  return spec;
}

void print_progress(const RunResult& r) {
  std::fprintf(stderr, "%-32s final %.6g%s  %.1fs\n", r.run_id.c_str(), r.final_metric,
               r.diverged ? " (diverged)" : "", r.wall_seconds);
}

int run_single(TaskKind task, const Options& o) {
  const ExperimentConfig c = build_config(task, o);
  const RunSpec spec = single_spec(c, o);
  const fs::path out(c.out_dir);
  fs::create_directories(out / "checkpoints");
  RunResult r;
  if (task == TaskKind::memory) {
    std::vector<TeacherMode> teachers{spec.teacher};
    const MemoryData data = prepare_memory_data(c.memory, teachers);
    std::optional<GruStudent> model;
    r = train_memory_run(c, spec, data, &model);
    save_checkpoint(out / "checkpoints" / r.run_id, model->parameters(),
                    {r.fingerprint, Rng(spec.seed).state(), nlohmann::json::object()});
  } else {
    const SceneData data = prepare_scene_data(c.scene);
    std::optional<VaeStudent> model;
    r = train_scene_run(c, spec, data, &model);
    save_checkpoint(out / "checkpoints" / r.run_id, model->parameters(),
                    {r.fingerprint, Rng(spec.seed).state(), nlohmann::json::object()});
  }
  const fs::path path = out / (r.run_id + ".json");
  std::ofstream file(path);
  if (!file) throw IoError("cannot write " + path.string());
  file << r.to_json().dump(2) << '\n';
  if (!o.quiet) print_progress(r);
  std::cout << path.string() << '\n';
  return 0;
}

int run_sweep_cmd(const Options& o) {
  if (o.config.empty()) throw ConfigError("sweep needs --config");
  ExperimentConfig probe = ExperimentConfig::load(o.config);
  const ExperimentConfig c = build_config(probe.task, o);
  SweepOptions so;
  if (!o.quiet) so.on_result = print_progress;
  const SweepResult result = run_sweep(c, so);
  write_sweep(result, c.out_dir);
  std::cout << format_report(result);
  return 0;
}

void write_panels(const SweepResult& result, const fs::path& dir, std::size_t count) {
  if (result.config.task != TaskKind::scene) {
    throw ConfigError("--panels applies to scene sweeps only");
  }
  const auto& sc = result.config.scene;
  const std::size_t dim = sc.dims.pixels();
  scene::SceneDataset test = prepare_scene_data(sc).test;
  const std::size_t n = std::min(count, test.size());
  test.factors.resize(n);
  test.pixels.resize(n * dim);
  std::vector<scene::SceneImage> tiles;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto img = test.image(i);
    tiles.push_back({sc.dims, {img.begin(), img.end()}});
  }
  fs::create_directories(dir / "panels");
  std::size_t rows = 1;
  for (const auto& cell : result.cells) {
    const RunResult* pick = nullptr;
    for (const auto& r : result.runs) {
      if (!r.diverged && r.spec.alpha == cell.alpha && r.spec.teacher == cell.teacher) {
        pick = &r;
        break;
      }
    }
    if (!pick) continue;
    Rng init(0);
    VaeStudent model(sc.model, init);
    load_checkpoint(dir / "checkpoints" / pick->run_id, model.parameters());
    ad::NoGradGuard guard;
    const auto out = model.forward(ad::Tensor::constant({test.size(), dim}, test.pixels), Mode::eval);
    const auto recon = out.reconstruction.values();
    for (std::size_t i = 0; i < test.size(); ++i) {
      tiles.push_back({sc.dims, {recon.begin() + static_cast<std::ptrdiff_t>(i * dim),
                                 recon.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim)}});
    }
    std::cout << "panel row " << rows++ << ": alpha " << cell.alpha << " "
              << to_string(cell.teacher) << " (" << pick->run_id << ")\n";
  }
  const fs::path path = dir / "panels" / "reconstructions.pgm";
  scene::write_pnm(path, scene::tile_images(tiles, test.size()));
  std::cout << "panel row 0: originals\n" << path.string() << '\n';
}

int run_report(const Options& o, const std::string& positional) {
  const std::string dir = !positional.empty() ? positional : o.out.value_or("");
  if (dir.empty()) throw ConfigError("report needs a sweep directory (--out or positional)");
  const SweepResult result = load_sweep(dir);
  write_sweep(result, dir);
  std::cout << format_report(result);
  if (o.panels) write_panels(result, dir, o.panels);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"b2m: teacher-embedding transfer experiments"};
  app.require_subcommand(1);
  Options o;
  std::string report_dir;

  auto* memory = app.add_subcommand("run-memory", "train one memory-task run");
  auto* scene = app.add_subcommand("run-scene", "train one scene-task run");
  auto* sweep = app.add_subcommand("sweep", "run an alpha x seed x teacher sweep");
  auto* report = app.add_subcommand("report", "summarise a sweep directory");
  for (auto* cmd : {memory, scene, sweep, report}) add_common(cmd, o);
  sweep->add_option("--threads", o.threads, "worker threads (0 = all cores)");
  report->add_option("dir", report_dir, "sweep output directory");
  report->add_option("--panels", o.panels, "write a PGM panel of N test reconstructions per cell");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (*memory) return run_single(TaskKind::memory, o);
    if (*scene) return run_single(TaskKind::scene, o);
    if (*sweep) return run_sweep_cmd(o);
    return run_report(o, report_dir);
  } catch (const ConfigError& e) {
    return fail(e.kind(), e.what(), 2);
  } catch (const Error& e) {
    return fail(e.kind(), e.what(), 1);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
}
