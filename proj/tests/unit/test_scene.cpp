#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "b2m/error.hpp"
#include "b2m/scene.hpp"

using namespace b2m;
using namespace b2m::scene;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("b2m_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("rendered pixels lie in [0, 1] and full fog is flat grey") {
  Rng rng(1);
  const auto ds = sample_dataset(rng, 50, Split::artificial);
  for (double v : ds.pixels) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  SceneFactors f;
  f.fog_opacity = 1.0;
  f.obstacle_position = 0.3;
  for (double v : render_scene(f).pixels) CHECK(v == doctest::Approx(0.5));
}

TEST_CASE("negating offset, curvature and obstacle mirrors the image") {
  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    SceneFactors f;
    f.road_offset = rng.uniform(-1, 1);
    f.road_curvature = rng.uniform(-1, 1);
    f.horizon_height = rng.uniform(0.3, 0.7);
    f.fog_opacity = rng.uniform(0, 1);
    if (trial % 2) f.obstacle_position = rng.uniform(-1, 1);
    SceneFactors g = f;
    g.road_offset = -f.road_offset;
    g.road_curvature = -f.road_curvature;
    if (f.obstacle_position) g.obstacle_position = -*f.obstacle_position;
    const auto a = render_scene(f), b = render_scene(g);
    for (std::size_t r = 0; r < a.dims.height; ++r) {
      for (std::size_t c = 0; c < a.dims.width; ++c) {
        CHECK(a.at(r, c) == doctest::Approx(b.at(r, a.dims.width - 1 - c)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("factors change the image") {
  SceneFactors base;
  const auto img = render_scene(base);
  SceneFactors moved = base;
  moved.road_offset = 0.5;
  CHECK(render_scene(moved).pixels != img.pixels);
  SceneFactors obstacle = base;
  obstacle.obstacle_position = 0.0;
  CHECK(render_scene(obstacle).pixels != img.pixels);
  SceneFactors horizon = base;
  horizon.horizon_height = 0.65;
  CHECK(render_scene(horizon).pixels != img.pixels);
}

TEST_CASE("factor validation and colour images") {
  SceneFactors f;
  f.fog_opacity = 1.5;
  CHECK_THROWS_AS(f.validate(), DomainError);
  f = {};
  f.horizon_height = 0.9;
  CHECK_THROWS_AS(render_scene(f), DomainError);
  const auto rgb = render_scene({}, {8, 4, 3});
  CHECK(rgb.pixels.size() == 96);
  CHECK_THROWS_AS(ImageDims({8, 4, 2}).validate(), ShapeError);
  CHECK(SceneFactors{}.as_vector().size() == kFactorDims);
}

TEST_CASE("dataset sampling is seeded and honours split ranges") {
  Rng a(5), b(5);
  const auto x = sample_dataset(a, 20, Split::artificial), y = sample_dataset(b, 20, Split::artificial);
  CHECK(x.pixels == y.pixels);
  Rng h(6);
  const auto human = sample_dataset(h, 500, Split::human);
  const auto ranges = FactorRanges::for_split(Split::human);
  std::size_t obstacles = 0;
  for (const auto& f : human.factors) {
    CHECK(f.fog_opacity >= ranges.fog.lo);
    CHECK(f.fog_opacity <= ranges.fog.hi);
    CHECK(f.road_curvature >= ranges.curvature.lo);
    CHECK(f.road_curvature <= ranges.curvature.hi);
    obstacles += f.obstacle_position.has_value();
  }
  CHECK(obstacles / 500.0 == doctest::Approx(0.5).epsilon(0.2));
  CHECK(split_from_string(to_string(Split::human)) == Split::human);
}

TEST_CASE("EEG stand-in: AR(1) noise with lag-1 correlation 0.9 and std sigma") {
  Rng map(7), noise(8);
  EegTeacher teacher(16, map, 0.1, 0.9);
  const SceneFactors f;
  const auto clean = teacher.clean(f);
  const std::size_t n = 20000;
  std::vector<std::vector<double>> resid(n);
  for (std::size_t t = 0; t < n; ++t) {
    auto v = teacher(f, noise);
    for (std::size_t d = 0; d < 16; ++d) v[d] -= clean[d];
    resid[t] = std::move(v);
  }
  double s0 = 0, s1 = 0;
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t d = 0; d < 16; ++d) {
      s0 += resid[t][d] * resid[t][d];
      if (t) s1 += resid[t][d] * resid[t - 1][d];
    }
  }
  CHECK(std::sqrt(s0 / (n * 16.0)) == doctest::Approx(0.1).epsilon(0.05));
  CHECK(s1 / s0 == doctest::Approx(0.9).epsilon(0.02));
  teacher.reset_noise();
  CHECK(teacher.dims() == 16);
}

TEST_CASE("dataset and image files round trip") {
  const auto dir = temp_dir("scene");
  Rng rng(9);
  const auto ds = sample_dataset(rng, 7, Split::human, {12, 6, 1});
  save_dataset(dir / "frames", ds);
  const auto back = load_dataset(dir / "frames");
  CHECK(back.pixels == ds.pixels);
  CHECK(back.dims == ds.dims);
  CHECK(back.split == Split::human);
  REQUIRE(back.factors.size() == 7);
  CHECK(back.factors[3].as_vector() == ds.factors[3].as_vector());
  CHECK_THROWS_AS(load_dataset(dir / "missing"), IoError);

  std::vector<SceneImage> imgs;
  for (std::size_t i = 0; i < 5; ++i) {
    const auto px = ds.image(i);
    imgs.push_back({ds.dims, {px.begin(), px.end()}});
  }
  const auto tiled = tile_images(imgs, 3);
  CHECK(tiled.dims.width == 3 * 12 + 2);
  CHECK(tiled.dims.height == 2 * 6 + 1);
  write_pnm(dir / "tiles.pgm", tiled);
  std::ifstream in(dir / "tiles.pgm", std::ios::binary);
  std::string magic;
  std::size_t w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  CHECK(magic == "P5");
  CHECK(w == tiled.dims.width);
  CHECK(h == tiled.dims.height);
  CHECK(maxval == 255);
  CHECK(fs::file_size(dir / "tiles.pgm") ==
        std::to_string(w).size() + std::to_string(h).size() + 9 + w * h);
}
