#pragma once

// Alpha x seed x teacher sweeps and their on-disk layout:
//
//   <out>/config.json        the effective config
//   <out>/runs.csv           run_id,alpha,seed,teacher,epoch,train_loss,test_metric
//   <out>/summary.csv        alpha,teacher,seed,mean,sem,n_included,n_diverged,p_vs_alpha0
//                            one row per run (seed = k) then one aggregate row
//                            per (alpha, teacher) cell (seed = "all")
//   <out>/convergence.csv    alpha,teacher,seed,epochs_to_convergence,final_metric
//   <out>/divergence.csv     run_id,alpha,teacher,seed,diverged,reason,epochs_recorded
//   <out>/runs/<id>.json     RunResult per run
//   <out>/checkpoints/<id>.* trained parameters per run
//
// Alpha = 0 runs do not depend on the teacher, so each seed is trained once
// and labelled teacher "none".

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "b2m/config.hpp"
#include "b2m/training.hpp"

namespace b2m {

struct SweepOptions {
  /// 0 = config.threads, which in turn falls back to hardware concurrency.
  std::size_t threads = 0;
  bool save_checkpoints = true;
  /// Called from the collector thread as runs finish (in completion order).
  std::function<void(const RunResult&)> on_result;
};

struct CellSummary {
  double alpha = 0.0;
  TeacherMode teacher = TeacherMode::none;
  std::vector<double> included;  // final metrics of non-diverged runs, seed order
  double mean = 0.0;
  double sem = 0.0;
  std::size_t n_included = 0;
  std::size_t n_diverged = 0;
  /// One-sided rank-sum p for "this cell improves on alpha = 0"; empty for the
  /// alpha = 0 cell or when either side has no included runs.
  std::optional<double> p_vs_alpha0;
  double mean_epochs_to_convergence = 0.0;
};

struct SweepResult {
  ExperimentConfig config;
  std::vector<RunResult> runs;  // plan order
  std::vector<CellSummary> cells;
};

/// Unique runs in a fixed order: alphas outer, teachers, then seeds.
std::vector<RunSpec> sweep_plan(const ExperimentConfig& config);

SweepResult run_sweep(const ExperimentConfig& config, const SweepOptions& options = {});

/// Groups runs into (alpha, teacher) cells in first-seen order.
std::vector<CellSummary> summarize(const std::vector<RunResult>& runs, TaskKind task);

void write_sweep(const SweepResult& result, const std::filesystem::path& out_dir);
/// Reads config.json and runs/*.json back from a sweep directory.
SweepResult load_sweep(const std::filesystem::path& out_dir);

/// Plain-text table of the cells.
std::string format_report(const SweepResult& result);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

}  // namespace b2m
