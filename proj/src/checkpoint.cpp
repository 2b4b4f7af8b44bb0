#include "b2m/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "b2m/error.hpp"

namespace b2m {

namespace {

std::filesystem::path with_suffix(std::filesystem::path stem, const char* suffix) {
  stem += suffix;
  return stem;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

}  // namespace

void save_checkpoint(const std::filesystem::path& stem, const std::vector<NamedParam>& params,
                     const CheckpointInfo& info) {
  static_assert(std::endian::native == std::endian::little, "checkpoint format is little-endian");
  nlohmann::json manifest{{"schema", "b2m.checkpoint"}, {"version", 1}};
  manifest["params"] = nlohmann::json::array();
  std::ofstream bin(with_suffix(stem, ".bin"), std::ios::binary);
  if (!bin) throw IoError("cannot write " + with_suffix(stem, ".bin").string());
  std::size_t offset = 0;
  for (const auto& p : params) {
    manifest["params"].push_back({{"name", p.name}, {"shape", p.tensor.shape()}, {"offset", offset}});
    const auto v = p.tensor.values();
    bin.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    offset += v.size();
  }
  manifest["config_fingerprint"] = info.config_fingerprint;
  manifest["rng_state"] = nlohmann::json::array();
  for (auto w : info.rng_state) manifest["rng_state"].push_back(hex64(w));
  manifest["extra"] = info.extra;
  std::ofstream js(with_suffix(stem, ".json"));
  if (!js) throw IoError("cannot write " + with_suffix(stem, ".json").string());
  js << manifest.dump(1) << '\n';
}

CheckpointInfo load_checkpoint(const std::filesystem::path& stem,
                               const std::vector<NamedParam>& params) {
  std::ifstream js(with_suffix(stem, ".json"));
  if (!js) throw IoError("cannot read " + with_suffix(stem, ".json").string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(js);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("checkpoint manifest: ") + e.what());
  }
  if (manifest.value("schema", "") != "b2m.checkpoint") {
    throw ConfigError("checkpoint manifest: wrong schema");
  }
  std::ifstream bin(with_suffix(stem, ".bin"), std::ios::binary);
  if (!bin) throw IoError("cannot read " + with_suffix(stem, ".bin").string());
  std::vector<char> raw((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
  const std::size_t total = raw.size() / sizeof(double);

  std::map<std::string, nlohmann::json> entries;
  for (const auto& e : manifest.at("params")) entries[e.at("name").get<std::string>()] = e;
  for (const auto& p : params) {
    auto it = entries.find(p.name);
    if (it == entries.end()) throw ConfigError("checkpoint has no parameter '" + p.name + "'");
    const auto shape = it->second.at("shape").get<ad::Shape>();
    if (shape != p.tensor.shape()) {
      throw ShapeError("checkpoint parameter '" + p.name + "' has shape " + ad::shape_str(shape) +
                       ", model expects " + ad::shape_str(p.tensor.shape()));
    }
    const auto offset = it->second.at("offset").get<std::size_t>();
    if (offset + p.tensor.size() > total) throw IoError("checkpoint binary truncated");
    auto dst = ad::Tensor(p.tensor).mutable_values();
    std::memcpy(dst.data(), raw.data() + offset * sizeof(double), dst.size() * sizeof(double));
  }
  CheckpointInfo info;
  info.config_fingerprint = manifest.value("config_fingerprint", "");
  const auto& words = manifest.at("rng_state");
  for (std::size_t i = 0; i < 4 && i < words.size(); ++i) {
    info.rng_state[i] = std::stoull(words[i].get<std::string>(), nullptr, 16);
  }
  info.extra = manifest.value("extra", nlohmann::json::object());
  return info;
}

}  // namespace b2m
