#include "b2m/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <condition_variable>
#include <cstdio>
#include <deque>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "b2m/checkpoint.hpp"
#include "b2m/error.hpp"
#include "b2m/stats.hpp"

namespace b2m {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::size_t worker_count(const ExperimentConfig& config, const SweepOptions& options,
                         std::size_t jobs) {
  std::size_t n = options.threads ? options.threads : config.threads;
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(n, jobs));
}

RunResult failed_run(const ExperimentConfig& config, const RunSpec& spec, const std::string& what) {
  RunResult r;
  r.task = config.task;
  r.spec = spec;
  r.run_id = run_id(config, spec);
  r.fingerprint = run_fingerprint(config, spec);
  r.diverged = true;
  r.divergence_reason = "error: " + what;
  return r;
}

CheckpointInfo checkpoint_info(const ExperimentConfig& config, const RunResult& r) {
  CheckpointInfo info;
  info.config_fingerprint = r.fingerprint;
  info.rng_state = Rng(r.spec.seed).state();
  info.extra = {{"run_id", r.run_id},
                {"task", to_string(config.task)},
                {"alpha", r.spec.alpha},
                {"teacher", to_string(r.spec.teacher)},
                {"seed", r.spec.seed}};
  return info;
}

bool same_cell(const CellSummary& c, const RunSpec& s) {
  return c.alpha == s.alpha && c.teacher == s.teacher;
}

}  // namespace

std::string format_double(double value) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::vector<RunSpec> sweep_plan(const ExperimentConfig& config) {
  std::vector<RunSpec> plan;
  std::vector<double> seen;
  for (double alpha : config.alphas) {
    if (std::find(seen.begin(), seen.end(), alpha) != seen.end()) continue;
    seen.push_back(alpha);
    if (alpha == 0.0) {
      for (auto seed : config.seeds) plan.push_back({0.0, TeacherMode::none, seed});
      continue;
    }
    for (auto teacher : config.teachers) {
      if (teacher == TeacherMode::none) continue;
      for (auto seed : config.seeds) plan.push_back({alpha, teacher, seed});
    }
  }
  return plan;
}

SweepResult run_sweep(const ExperimentConfig& config, const SweepOptions& options) {
  config.validate();
  const auto plan = sweep_plan(config);
  SweepResult result;
  result.config = config;
  result.runs.resize(plan.size());

  std::optional<MemoryData> memory_data;
  std::optional<SceneData> scene_data;
  if (config.task == TaskKind::memory) {
    memory_data = prepare_memory_data(config.memory, config.teachers);
  } else {
    scene_data = prepare_scene_data(config.scene);
  }

  const fs::path ckpt_dir = fs::path(config.out_dir) / "checkpoints";
  if (options.save_checkpoints) fs::create_directories(ckpt_dir);

  auto run_one = [&](const RunSpec& spec) {
    try {
      if (config.task == TaskKind::memory) {
        std::optional<GruStudent> model;
        RunResult r = train_memory_run(config, spec, *memory_data,
                                       options.save_checkpoints ? &model : nullptr);
        if (model) save_checkpoint(ckpt_dir / r.run_id, model->parameters(), checkpoint_info(config, r));
        return r;
      }
      std::optional<VaeStudent> model;
      RunResult r = train_scene_run(config, spec, *scene_data,
                                    options.save_checkpoints ? &model : nullptr);
      if (model) save_checkpoint(ckpt_dir / r.run_id, model->parameters(), checkpoint_info(config, r));
      return r;
    } catch (const std::exception& e) {
      return failed_run(config, spec, e.what());
    }
  };

  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::size_t> done;
  auto worker = [&] {
    for (std::size_t i = next++; i < plan.size(); i = next++) {
      RunResult r = run_one(plan[i]);
      std::lock_guard lock(mu);
      result.runs[i] = std::move(r);
      done.push_back(i);
      cv.notify_one();
    }
  };

  std::vector<std::thread> workers;
  const std::size_t n = worker_count(config, options, plan.size());
  for (std::size_t t = 0; t < n; ++t) workers.emplace_back(worker);
  for (std::size_t collected = 0; collected < plan.size(); ++collected) {
    std::unique_lock lock(mu);
    cv.wait(lock, [&] { return !done.empty(); });
    const std::size_t i = done.front();
    done.pop_front();
    const RunResult& r = result.runs[i];
    lock.unlock();
    if (options.on_result) options.on_result(r);
  }
  for (auto& w : workers) w.join();

  result.cells = summarize(result.runs, config.task);
  return result;
}

std::vector<CellSummary> summarize(const std::vector<RunResult>& runs, TaskKind task) {
  std::vector<CellSummary> cells;
  std::vector<std::vector<double>> epochs;
  for (const auto& r : runs) {
    auto it = std::find_if(cells.begin(), cells.end(),
                           [&](const CellSummary& c) { return same_cell(c, r.spec); });
    if (it == cells.end()) {
      cells.push_back({});
      cells.back().alpha = r.spec.alpha;
      cells.back().teacher = r.spec.teacher;
      epochs.emplace_back();
      it = cells.end() - 1;
    }
    if (r.diverged) {
      ++it->n_diverged;
      continue;
    }
    it->included.push_back(r.final_metric);
    std::vector<double> metric;
    for (const auto& e : r.history) metric.push_back(e.test_metric);
    epochs[it - cells.begin()].push_back(
        static_cast<double>(epochs_to_convergence(metric, task == TaskKind::memory)));
  }

  const CellSummary* base = nullptr;
  for (const auto& c : cells) {
    if (c.alpha == 0.0) base = &c;
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    auto& c = cells[i];
    c.n_included = c.included.size();
    if (c.n_included) {
      c.mean = sample_mean(c.included);
      c.sem = standard_error(c.included);
      c.mean_epochs_to_convergence = sample_mean(epochs[i]);
    }
    if (base && &c != base && c.n_included && base->n_included) {
      c.p_vs_alpha0 = task == TaskKind::memory
                          ? rank_sum_test(c.included, base->included).p_value
                          : rank_sum_test(base->included, c.included).p_value;
    }
  }
  return cells;
}

void write_sweep(const SweepResult& result, const fs::path& out_dir) {
  fs::create_directories(out_dir / "runs");
  {
    auto out = open_out(out_dir / "config.json");
    nlohmann::json cfg = result.config.to_json();
    cfg["out"] = out_dir.string();
    out << cfg.dump(2) << '\n';
  }
  for (const auto& r : result.runs) {
    auto out = open_out(out_dir / "runs" / (r.run_id + ".json"));
    out << r.to_json().dump(2) << '\n';
  }

  auto runs = open_out(out_dir / "runs.csv");
  runs << "run_id,alpha,seed,teacher,epoch,train_loss,test_metric\n";
  for (const auto& r : result.runs) {
    for (const auto& e : r.history) {
      runs << r.run_id << ',' << format_double(r.spec.alpha) << ',' << r.spec.seed << ','
           << to_string(r.spec.teacher) << ',' << e.epoch << ',' << format_double(e.train_loss)
           << ',' << format_double(e.test_metric) << '\n';
    }
  }

  auto summary = open_out(out_dir / "summary.csv");
  summary << "alpha,teacher,seed,mean,sem,n_included,n_diverged,p_vs_alpha0\n";
  for (const auto& r : result.runs) {
    summary << format_double(r.spec.alpha) << ',' << to_string(r.spec.teacher) << ','
            << r.spec.seed << ',' << format_double(r.final_metric) << ",0," << (r.diverged ? 0 : 1)
            << ',' << (r.diverged ? 1 : 0) << ",\n";
  }
  for (const auto& c : result.cells) {
    summary << format_double(c.alpha) << ',' << to_string(c.teacher) << ",all,"
            << format_double(c.mean) << ',' << format_double(c.sem) << ',' << c.n_included << ','
            << c.n_diverged << ',' << (c.p_vs_alpha0 ? format_double(*c.p_vs_alpha0) : "") << '\n';
  }

  auto conv = open_out(out_dir / "convergence.csv");
  conv << "alpha,teacher,seed,epochs_to_convergence,final_metric\n";
  const bool higher = result.config.task == TaskKind::memory;
  for (const auto& r : result.runs) {
    std::vector<double> metric;
    for (const auto& e : r.history) metric.push_back(e.test_metric);
    conv << format_double(r.spec.alpha) << ',' << to_string(r.spec.teacher) << ',' << r.spec.seed
         << ',' << epochs_to_convergence(metric, higher) << ',' << format_double(r.final_metric)
         << '\n';
  }

  auto div = open_out(out_dir / "divergence.csv");
  div << "run_id,alpha,teacher,seed,diverged,reason,epochs_recorded\n";
  for (const auto& r : result.runs) {
    std::string reason = r.divergence_reason;
    std::replace(reason.begin(), reason.end(), ',', ';');
    std::replace(reason.begin(), reason.end(), '\n', ' ');
    div << r.run_id << ',' << format_double(r.spec.alpha) << ',' << to_string(r.spec.teacher)
        << ',' << r.spec.seed << ',' << (r.diverged ? 1 : 0) << ',' << reason << ','
        << r.history.size() << '\n';
  }
}

SweepResult load_sweep(const fs::path& out_dir) {
  SweepResult result;
  result.config = ExperimentConfig::load((out_dir / "config.json").string());
  for (const auto& spec : sweep_plan(result.config)) {
    const fs::path path = out_dir / "runs" / (run_id(result.config, spec) + ".json");
    std::ifstream in(path);
    if (!in) throw IoError("missing run result " + path.string());
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw IoError("malformed run result " + path.string() + " at byte " + std::to_string(e.byte));
    }
    result.runs.push_back(RunResult::from_json(j));
  }
  result.cells = summarize(result.runs, result.config.task);
  return result;
}

std::string format_report(const SweepResult& result) {
  const bool memory = result.config.task == TaskKind::memory;
  std::ostringstream os;
  char line[160];
  os << to_string(result.config.task) << " sweep, " << result.runs.size() << " runs, metric "
     << (memory ? "test accuracy (higher is better)" : "test reconstruction MSE (lower is better)")
     << "\n";
  std::snprintf(line, sizeof line, "%8s  %-9s  %12s  %12s  %5s  %5s  %9s  %8s\n", "alpha",
                "teacher", "mean", "sem", "incl", "div", "p_vs_a0", "epochs95");
  os << line;
  std::size_t diverged = 0;
  for (const auto& c : result.cells) {
    diverged += c.n_diverged;
    char p[16] = "-";
    if (c.p_vs_alpha0) std::snprintf(p, sizeof p, "%.4f", *c.p_vs_alpha0);
    std::snprintf(line, sizeof line, "%8.4f  %-9s  %12.6g  %12.6g  %5zu  %5zu  %9s  %8.1f\n",
                  c.alpha, to_string(c.teacher).c_str(), c.mean, c.sem, c.n_included,
                  c.n_diverged, p, c.mean_epochs_to_convergence);
    os << line;
  }
  os << "excluded " << diverged << " of " << result.runs.size() << " runs as diverged\n";
  return os.str();
}

}  // namespace b2m
