#pragma once

// Experiment configuration. JSON schema (version 1); every key optional,
// unknown keys rejected:
//
//   version        1
//   task           "memory" | "scene"
//   alphas         [reals in [0, 1]]         default [0, 0.02, ..., 0.2]
//   seeds          [distinct integers]       default [1..10]
//   teachers       ["oracle"|"spike-pca"|"noise"|"none"]   default ["oracle", "noise"]
//   epochs         integer >= 1
//   learning_rate  real > 0                  default 1e-4
//   threads        integer, 0 = hardware concurrency (not part of the fingerprint)
//   memory         {hidden_size, embedding_dim, dropout, tau, train_sequences,
//                   train_length, test_sequences, test_length, teacher_sigma,
//                   spike_neurons, data_seed}
//   scene          {width, height, channels, encoder_widths, decoder_widths,
//                   embedding_dim, beta, leaky_slope, train_scenes, test_scenes,
//                   human_scenes, task_batch, transfer_batch, teacher_sigma,
//                   data_seed}
//   out            output directory (not part of the fingerprint)

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "b2m/scene.hpp"
#include "b2m/students.hpp"

namespace b2m {

enum class TaskKind { memory, scene };
enum class TeacherMode { oracle, spike_pca, noise, none };

std::string to_string(TaskKind task);
std::string to_string(TeacherMode mode);
TeacherMode teacher_mode_from_string(const std::string& name);

struct MemoryTaskConfig {
  GruStudentConfig model;
  std::size_t train_sequences = 200;
  std::size_t train_length = 26;
  std::size_t test_sequences = 1000;
  std::size_t test_length = 26;
  double teacher_sigma = 0.05;
  std::size_t spike_neurons = 32;
  std::uint64_t data_seed = 2024;
};

struct SceneTaskConfig {
  scene::ImageDims dims;
  VaeStudentConfig model;
  std::size_t train_scenes = 2000;
  std::size_t test_scenes = 400;
  std::size_t human_scenes = 2000;
  std::size_t task_batch = 32;
  std::size_t transfer_batch = 64;
  double teacher_sigma = 0.1;
  std::uint64_t data_seed = 2024;
};

struct ExperimentConfig {
  TaskKind task = TaskKind::memory;
  std::vector<double> alphas{0.0, 0.02, 0.04, 0.06, 0.08, 0.1, 0.12, 0.14, 0.16, 0.18, 0.2};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<TeacherMode> teachers{TeacherMode::oracle, TeacherMode::noise};
  std::size_t epochs = 150;
  double learning_rate = 1e-4;
  std::size_t threads = 0;
  MemoryTaskConfig memory;
  SceneTaskConfig scene;
  std::string out_dir = "b2m_out";

  /// Defaults for `task` (the scene task trains for 100 epochs).
  static ExperimentConfig defaults(TaskKind task);
  /// Starts from defaults(task) and applies every key of `j`. Throws
  /// ConfigError naming the offending key.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::string& path);

  void validate() const;
  nlohmann::json to_json() const;
  /// 16 hex digits of FNV-1a over the canonical (sorted-key, compact) JSON
  /// of every result-affecting field.
  std::string fingerprint() const;
};

std::string fnv1a_hex(const std::string& text);

}  // namespace b2m
