#pragma once

// Parameter checkpoints: `<stem>.bin` holds every parameter's values as
// little-endian float64, concatenated in manifest order; `<stem>.json` is
//
//   {"schema": "b2m.checkpoint", "version": 1,
//    "params": [{"name": "...", "shape": [r, c], "offset": k}, ...],
//    "config_fingerprint": "...", "rng_state": ["hex64", x4], "extra": {...}}
//
// where offset counts doubles from the start of the binary file.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "b2m/students.hpp"

namespace b2m {

struct CheckpointInfo {
  std::string config_fingerprint;
  std::array<std::uint64_t, 4> rng_state{};
  nlohmann::json extra = nlohmann::json::object();
};

void save_checkpoint(const std::filesystem::path& stem, const std::vector<NamedParam>& params,
                     const CheckpointInfo& info);

/// Overwrites the values of `params` (matched by name and shape).
CheckpointInfo load_checkpoint(const std::filesystem::path& stem,
                               const std::vector<NamedParam>& params);

}  // namespace b2m
