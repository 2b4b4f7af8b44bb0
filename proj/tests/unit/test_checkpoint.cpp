#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "b2m/checkpoint.hpp"
#include "b2m/error.hpp"

using namespace b2m;
namespace fs = std::filesystem;

TEST_CASE("checkpoint round trip restores every parameter bitwise") {
  const fs::path dir = fs::temp_directory_path() / "b2m_test_ckpt";
  fs::remove_all(dir);
  fs::create_directories(dir);
  Rng a(1), b(2);
  GruStudentConfig cfg;
  cfg.hidden_size = 5;
  const GruStudent saved(cfg, a);
  GruStudent loaded(cfg, b);
  CheckpointInfo info;
  info.config_fingerprint = "abc123";
  info.rng_state = Rng(77).state();
  info.extra = {{"note", "x"}};
  save_checkpoint(dir / "gru", saved.parameters(), info);
  CHECK(fs::exists(dir / "gru.bin"));
  CHECK(fs::exists(dir / "gru.json"));
  const auto back = load_checkpoint(dir / "gru", loaded.parameters());
  CHECK(back.config_fingerprint == "abc123");
  CHECK(back.rng_state == info.rng_state);
  CHECK(back.extra["note"] == "x");
  const auto p = saved.parameters(), q = loaded.parameters();
  for (std::size_t i = 0; i < p.size(); ++i) {
    CAPTURE(p[i].name);
    CHECK(std::equal(p[i].tensor.values().begin(), p[i].tensor.values().end(), q[i].tensor.values().begin()));
  }

  GruStudentConfig other = cfg;
  other.hidden_size = 6;
  Rng c(3);
  GruStudent wrong(other, c);
  CHECK_THROWS_AS(load_checkpoint(dir / "gru", wrong.parameters()), ShapeError);
  CHECK_THROWS_AS(load_checkpoint(dir / "nothing", loaded.parameters()), IoError);

  // Truncated binary.
  fs::resize_file(dir / "gru.bin", 16);
  CHECK_THROWS_AS(load_checkpoint(dir / "gru", loaded.parameters()), IoError);
}
