#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "b2m/config.hpp"
#include "b2m/memory_task.hpp"
#include "b2m/scene.hpp"
#include "b2m/students.hpp"
#include "b2m/teacher.hpp"

namespace b2m {

struct RunSpec {
  double alpha = 0.0;
  TeacherMode teacher = TeacherMode::none;
  std::uint64_t seed = 1;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double test_metric = 0.0;  // accuracy (memory) or reconstruction MSE (scene)
  double test_loss = 0.0;    // held-out task loss used for divergence checks
};

struct RunResult {
  std::string run_id;
  TaskKind task = TaskKind::memory;
  RunSpec spec;
  std::vector<EpochRecord> history;
  double final_metric = 0.0;
  bool diverged = false;
  /// "non-finite-loss" or "test-loss-above-1"; empty when not diverged.
  std::string divergence_reason;
  double wall_seconds = 0.0;
  std::string fingerprint;

  bool higher_is_better() const { return task == TaskKind::memory; }
  nlohmann::json to_json() const;
  static RunResult from_json(const nlohmann::json& j);
};

/// Fingerprint of `config` restricted to one (alpha, teacher) cell; the seed
/// is recorded separately.
std::string run_fingerprint(const ExperimentConfig& config, const RunSpec& spec);
std::string run_id(const ExperimentConfig& config, const RunSpec& spec);

/// True iff some test loss exceeds 1 and the final one is still above 1.
bool detect_divergence(const std::vector<double>& test_losses);

/// First 1-based epoch whose metric is within 5% of the run's final value:
/// metric >= 0.95 * final when higher is better, metric <= final / 0.95
/// otherwise. 0 for an empty history.
std::size_t epochs_to_convergence(const std::vector<double>& metric, bool higher_is_better);

// ---------------------------------------------------------------------------
// Memory task

/// The fixed "human" side of the memory experiment: training episodes and
/// their teacher rows, plus a held-out simulated test set. Built once from
/// `data_seed` and shared by every run.
struct MemoryData {
  std::vector<memory::Episode> train;
  std::vector<std::vector<double>> train_inputs;
  std::vector<std::vector<int>> train_targets;
  std::vector<memory::Episode> test;
  std::vector<std::vector<double>> test_inputs;
  std::vector<std::vector<int>> test_targets;
  std::vector<memory::TeacherEmbeddingSet> oracle_teacher;
  std::vector<memory::TeacherEmbeddingSet> spike_teacher;
  std::vector<memory::TeacherEmbeddingSet> noise_teacher;

  const std::vector<memory::TeacherEmbeddingSet>& teacher(TeacherMode mode) const;
};

/// `teachers` selects which teacher sets to build (spike-pca is costly).
MemoryData prepare_memory_data(const MemoryTaskConfig& config,
                               const std::vector<TeacherMode>& teachers);

struct MemoryEval {
  double accuracy = 0.0;
  double mse = 0.0;
};

MemoryEval evaluate_memory(const GruStudent& model, const MemoryData& data);

RunResult train_memory_run(const ExperimentConfig& config, const RunSpec& spec,
                           const MemoryData& data,
                           std::optional<GruStudent>* trained = nullptr);

// ---------------------------------------------------------------------------
// Scene task

struct SceneData {
  scene::SceneDataset train;  // artificial set A
  scene::SceneDataset test;   // held-out A
  scene::SceneDataset human;  // human-experienced set H
  std::vector<double> eeg_teacher;    // human.size() x embedding_dim
  std::vector<double> noise_teacher;  // same shape, N(0, 1)

  const std::vector<double>& teacher(TeacherMode mode) const;
};

SceneData prepare_scene_data(const SceneTaskConfig& config);

double evaluate_scene(const VaeStudent& model, const scene::SceneDataset& test);

RunResult train_scene_run(const ExperimentConfig& config, const RunSpec& spec,
                          const SceneData& data,
                          std::optional<VaeStudent>* trained = nullptr);

}  // namespace b2m
