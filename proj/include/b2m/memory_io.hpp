#pragma once

// JSON form of memory-task datasets:
//
//   {
//     "schema": "b2m.memory-dataset", "version": 1,
//     "episodes": [{"id": 0, "stimuli": [2, 0, 1], "target_pair": [0, 1],
//                   "distractor": 2, "initial_target": 0}, ...],
//     "teachers": [{"episode_id": 0, "provenance": "oracle", "dims": 7,
//                   "embeddings": [[...7 reals...], ...]}, ...]
//   }
//
// "teachers" may be empty; otherwise embeddings row i belongs to step i of
// the episode with the same id.

#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "b2m/memory_task.hpp"
#include "b2m/teacher.hpp"

namespace b2m::memory {

struct MemoryDataset {
  std::vector<Episode> episodes;
  std::vector<TeacherEmbeddingSet> teachers;

  /// Throws when a teacher set does not line up with its episode.
  void validate() const;
};

nlohmann::json to_json(const Episode& episode);
nlohmann::json to_json(const TeacherEmbeddingSet& set);
nlohmann::json to_json(const MemoryDataset& dataset);

Episode episode_from_json(const nlohmann::json& j);
TeacherEmbeddingSet teacher_from_json(const nlohmann::json& j);
MemoryDataset dataset_from_json(const nlohmann::json& j);

void save_dataset(const std::filesystem::path& path, const MemoryDataset& dataset);
MemoryDataset load_dataset(const std::filesystem::path& path);

}  // namespace b2m::memory
