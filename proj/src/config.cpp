#include "b2m/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "b2m/error.hpp"

namespace b2m {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::string& where,
                    std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError("config key '" + where + "' must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!ok.contains(key)) {
      throw ConfigError("unknown config key '" + (where.empty() ? key : where + "." + key) + "'");
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, const std::string& where, T& out) {
  if (!obj.contains(key)) return;
  const std::string path = where.empty() ? key : where + "." + key;
  const json& v = obj.at(key);
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError("config key '" + path + "' must be a number");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError("config key '" + path + "' must be an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
          throw ConfigError("config key '" + path + "' must be non-negative");
        }
      }
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError("config key '" + path + "' must be a string");
    }
    out = v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + path + "' has the wrong type");
  }
}

}  // namespace

std::string to_string(TaskKind task) { return task == TaskKind::memory ? "memory" : "scene"; }

std::string to_string(TeacherMode mode) {
  switch (mode) {
    case TeacherMode::oracle: return "oracle";
    case TeacherMode::spike_pca: return "spike-pca";
    case TeacherMode::noise: return "noise";
    case TeacherMode::none: return "none";
  }
  return "none";
}

TeacherMode teacher_mode_from_string(const std::string& name) {
  if (name == "oracle" || name == "eeg") return TeacherMode::oracle;
  if (name == "spike-pca") return TeacherMode::spike_pca;
  if (name == "noise") return TeacherMode::noise;
  if (name == "none") return TeacherMode::none;
  throw ConfigError("unknown teacher mode '" + name + "'");
}

ExperimentConfig ExperimentConfig::defaults(TaskKind task) {
  ExperimentConfig c;
  c.task = task;
  c.epochs = task == TaskKind::memory ? 150 : 100;
  c.scene.model.input_dim = c.scene.dims.pixels();
  return c;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  reject_unknown(j, "",
                 {"version", "task", "alphas", "seeds", "teachers", "epochs", "learning_rate",
                  "threads", "memory", "scene", "out"});
  if (j.contains("version") && j.at("version") != 1) {
    throw ConfigError("config key 'version' must be 1");
  }
  std::string task_name = "memory";
  read(j, "task", "", task_name);
  if (task_name != "memory" && task_name != "scene") {
    throw ConfigError("config key 'task' must be \"memory\" or \"scene\"");
  }
  ExperimentConfig c = defaults(task_name == "memory" ? TaskKind::memory : TaskKind::scene);
  read(j, "alphas", "", c.alphas);
  read(j, "seeds", "", c.seeds);
  if (j.contains("teachers")) {
    std::vector<std::string> names;
    read(j, "teachers", "", names);
    c.teachers.clear();
    for (const auto& n : names) {
      try {
        c.teachers.push_back(teacher_mode_from_string(n));
      } catch (const ConfigError&) {
        throw ConfigError("config key 'teachers' has unknown mode '" + n + "'");
      }
    }
  }
  read(j, "epochs", "", c.epochs);
  read(j, "learning_rate", "", c.learning_rate);
  read(j, "threads", "", c.threads);
  read(j, "out", "", c.out_dir);

  if (j.contains("memory")) {
    const json& m = j.at("memory");
    reject_unknown(m, "memory",
                   {"hidden_size", "embedding_dim", "dropout", "tau", "train_sequences",
                    "train_length", "test_sequences", "test_length", "teacher_sigma",
                    "spike_neurons", "data_seed"});
    auto& mc = c.memory;
    read(m, "hidden_size", "memory", mc.model.hidden_size);
    read(m, "embedding_dim", "memory", mc.model.embedding_dim);
    read(m, "dropout", "memory", mc.model.dropout_rate);
    read(m, "tau", "memory", mc.model.tau);
    read(m, "train_sequences", "memory", mc.train_sequences);
    read(m, "train_length", "memory", mc.train_length);
    read(m, "test_sequences", "memory", mc.test_sequences);
    read(m, "test_length", "memory", mc.test_length);
    read(m, "teacher_sigma", "memory", mc.teacher_sigma);
    read(m, "spike_neurons", "memory", mc.spike_neurons);
    read(m, "data_seed", "memory", mc.data_seed);
  }
  if (j.contains("scene")) {
    const json& s = j.at("scene");
    reject_unknown(s, "scene",
                   {"width", "height", "channels", "encoder_widths", "decoder_widths",
                    "embedding_dim", "beta", "leaky_slope", "train_scenes", "test_scenes",
                    "human_scenes", "task_batch", "transfer_batch", "teacher_sigma",
                    "data_seed"});
    auto& sc = c.scene;
    read(s, "width", "scene", sc.dims.width);
    read(s, "height", "scene", sc.dims.height);
    read(s, "channels", "scene", sc.dims.channels);
    read(s, "encoder_widths", "scene", sc.model.encoder_widths);
    read(s, "decoder_widths", "scene", sc.model.decoder_widths);
    read(s, "embedding_dim", "scene", sc.model.embedding_dim);
    read(s, "beta", "scene", sc.model.beta);
    read(s, "leaky_slope", "scene", sc.model.leaky_slope);
    read(s, "train_scenes", "scene", sc.train_scenes);
    read(s, "test_scenes", "scene", sc.test_scenes);
    read(s, "human_scenes", "scene", sc.human_scenes);
    read(s, "task_batch", "scene", sc.task_batch);
    read(s, "transfer_batch", "scene", sc.transfer_batch);
    read(s, "teacher_sigma", "scene", sc.teacher_sigma);
    read(s, "data_seed", "scene", sc.data_seed);
    sc.model.input_dim = sc.dims.pixels();
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON in " + path + " at byte " + std::to_string(e.byte));
  }
  return from_json(j);
}

void ExperimentConfig::validate() const {
  if (alphas.empty()) throw ConfigError("config key 'alphas' must not be empty");
  for (double a : alphas) {
    if (!(a >= 0.0 && a <= 1.0)) {
      throw ConfigError("config key 'alphas' has value " + std::to_string(a) + " outside [0, 1]");
    }
  }
  if (seeds.empty()) throw ConfigError("config key 'seeds' must not be empty");
  std::set<std::uint64_t> distinct(seeds.begin(), seeds.end());
  if (distinct.size() != seeds.size()) throw ConfigError("config key 'seeds' must be distinct");
  if (teachers.empty()) throw ConfigError("config key 'teachers' must not be empty");
  if (epochs < 1) throw ConfigError("config key 'epochs' must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("config key 'learning_rate' must be > 0");
  if (task == TaskKind::memory) {
    memory.model.validate();
    if (memory.train_length < 1 || memory.train_length > memory::kMaxEpisodeLength ||
        memory.test_length < 1 || memory.test_length > memory::kMaxEpisodeLength) {
      throw ConfigError("config keys 'memory.train_length'/'memory.test_length' must lie in [1, 26]");
    }
    if (memory.train_sequences < 1 || memory.test_sequences < 1) {
      throw ConfigError("config keys 'memory.train_sequences'/'memory.test_sequences' must be >= 1");
    }
    if (memory.spike_neurons < memory.model.embedding_dim) {
      throw ConfigError("config key 'memory.spike_neurons' must be >= embedding_dim");
    }
  } else {
    scene.dims.validate();
    scene.model.validate();
    if (scene.model.input_dim != scene.dims.pixels()) {
      throw ConfigError("scene model input_dim does not match image dims");
    }
    if (scene.model.embedding_dim < scene::kFactorDims) {
      throw ConfigError("config key 'scene.embedding_dim' must be >= 6 (teacher dims)");
    }
    if (scene.task_batch < 1 || scene.transfer_batch < 1 || scene.train_scenes < 1 ||
        scene.test_scenes < 1 || scene.human_scenes < 1) {
      throw ConfigError("scene dataset and batch sizes must be >= 1");
    }
    for (auto t : teachers) {
      if (t == TeacherMode::spike_pca) {
        throw ConfigError("config key 'teachers': spike-pca applies to the memory task only");
      }
    }
  }
}

json ExperimentConfig::to_json() const {
  std::vector<std::string> teacher_names;
  for (auto t : teachers) teacher_names.push_back(to_string(t));
  json j{{"version", 1},
         {"task", to_string(task)},
         {"alphas", alphas},
         {"seeds", seeds},
         {"teachers", teacher_names},
         {"epochs", epochs},
         {"learning_rate", learning_rate},
         {"threads", threads},
         {"out", out_dir}};
  if (task == TaskKind::memory) {
    j["memory"] = {{"hidden_size", memory.model.hidden_size},
                   {"embedding_dim", memory.model.embedding_dim},
                   {"dropout", memory.model.dropout_rate},
                   {"tau", memory.model.tau},
                   {"train_sequences", memory.train_sequences},
                   {"train_length", memory.train_length},
                   {"test_sequences", memory.test_sequences},
                   {"test_length", memory.test_length},
                   {"teacher_sigma", memory.teacher_sigma},
                   {"spike_neurons", memory.spike_neurons},
                   {"data_seed", memory.data_seed}};
  } else {
    j["scene"] = {{"width", scene.dims.width},
                  {"height", scene.dims.height},
                  {"channels", scene.dims.channels},
                  {"encoder_widths", scene.model.encoder_widths},
                  {"decoder_widths", scene.model.decoder_widths},
                  {"embedding_dim", scene.model.embedding_dim},
                  {"beta", scene.model.beta},
                  {"leaky_slope", scene.model.leaky_slope},
                  {"train_scenes", scene.train_scenes},
                  {"test_scenes", scene.test_scenes},
                  {"human_scenes", scene.human_scenes},
                  {"task_batch", scene.task_batch},
                  {"transfer_batch", scene.transfer_batch},
                  {"teacher_sigma", scene.teacher_sigma},
                  {"data_seed", scene.data_seed}};
  }
  return j;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string ExperimentConfig::fingerprint() const {
  json j = to_json();
  j.erase("out");
  j.erase("threads");
  return fnv1a_hex(j.dump());
}

}  // namespace b2m
