#include "b2m/memory_io.hpp"

#include <fstream>
#include <map>

#include "b2m/error.hpp"

namespace b2m::memory {

using nlohmann::json;

void MemoryDataset::validate() const {
  std::map<std::int64_t, const Episode*> by_id;
  for (const auto& ep : episodes) {
    ep.validate();
    if (!by_id.emplace(ep.id, &ep).second) {
      throw DomainError("dataset: duplicate episode id " + std::to_string(ep.id));
    }
  }
  for (const auto& t : teachers) {
    auto it = by_id.find(t.episode_id);
    if (it == by_id.end()) {
      throw DomainError("dataset: teacher set for unknown episode " + std::to_string(t.episode_id));
    }
    if (t.rows() != it->second->length() || t.values.size() != t.rows() * t.dims) {
      throw ShapeError("dataset: teacher set for episode " + std::to_string(t.episode_id) +
                       " has " + std::to_string(t.rows()) + " rows, episode has " +
                       std::to_string(it->second->length()) + " steps");
    }
  }
}

json to_json(const Episode& episode) {
  return {{"id", episode.id},
          {"stimuli", episode.stimuli},
          {"target_pair", episode.target_pair},
          {"distractor", episode.distractor},
          {"initial_target", episode.initial_target}};
}

json to_json(const TeacherEmbeddingSet& set) {
  json rows = json::array();
  for (std::size_t r = 0; r < set.rows(); ++r) {
    rows.push_back(std::vector<double>(set.values.begin() + static_cast<std::ptrdiff_t>(r * set.dims),
                                       set.values.begin() + static_cast<std::ptrdiff_t>((r + 1) * set.dims)));
  }
  return {{"episode_id", set.episode_id},
          {"provenance", to_string(set.provenance)},
          {"dims", set.dims},
          {"embeddings", std::move(rows)}};
}

json to_json(const MemoryDataset& dataset) {
  json j{{"schema", "b2m.memory-dataset"}, {"version", 1}};
  j["episodes"] = json::array();
  for (const auto& ep : dataset.episodes) j["episodes"].push_back(to_json(ep));
  j["teachers"] = json::array();
  for (const auto& t : dataset.teachers) j["teachers"].push_back(to_json(t));
  return j;
}

Episode episode_from_json(const json& j) {
  try {
    Episode ep;
    ep.id = j.at("id").get<std::int64_t>();
    ep.stimuli = j.at("stimuli").get<std::vector<int>>();
    ep.target_pair = j.at("target_pair").get<std::array<int, 2>>();
    ep.distractor = j.at("distractor").get<int>();
    ep.initial_target = j.at("initial_target").get<int>();
    ep.validate();
    return ep;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("episode: ") + e.what());
  }
}

TeacherEmbeddingSet teacher_from_json(const json& j) {
  try {
    TeacherEmbeddingSet set;
    set.episode_id = j.at("episode_id").get<std::int64_t>();
    set.provenance = provenance_from_string(j.at("provenance").get<std::string>());
    set.dims = j.at("dims").get<std::size_t>();
    for (const auto& row : j.at("embeddings")) {
      const auto values = row.get<std::vector<double>>();
      if (values.size() != set.dims) {
        throw ShapeError("teacher set for episode " + std::to_string(set.episode_id) +
                         ": row of width " + std::to_string(values.size()) + ", dims " +
                         std::to_string(set.dims));
      }
      set.values.insert(set.values.end(), values.begin(), values.end());
    }
    return set;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("teacher set: ") + e.what());
  }
}

MemoryDataset dataset_from_json(const json& j) {
  if (j.value("schema", std::string()) != "b2m.memory-dataset") {
    throw ConfigError("dataset: missing or wrong 'schema' (expected b2m.memory-dataset)");
  }
  if (j.value("version", 0) != 1) throw ConfigError("dataset: unsupported 'version'");
  MemoryDataset ds;
  for (const auto& e : j.at("episodes")) ds.episodes.push_back(episode_from_json(e));
  if (j.contains("teachers")) {
    for (const auto& t : j.at("teachers")) ds.teachers.push_back(teacher_from_json(t));
  }
  ds.validate();
  return ds;
}

void save_dataset(const std::filesystem::path& path, const MemoryDataset& dataset) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json(dataset).dump(1) << '\n';
}

MemoryDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return dataset_from_json(j);
}

}  // namespace b2m::memory
