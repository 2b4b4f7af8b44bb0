#include <doctest.h>

#include <cmath>

#include "b2m/memory_io.hpp"
#include "b2m/teacher.hpp"

using namespace b2m;
using namespace b2m::memory;

TEST_CASE("oracle teacher rows follow the latent state") {
  Rng rng(1);
  const auto teacher = OracleTeacher::random(rng, 0.0);
  const Episode ep = generate_episode(rng, 26, 3);
  Rng noise(2);
  const auto set = teacher.embed(ep, noise);
  CHECK(set.rows() == 26);
  CHECK(set.dims == kTeacherDims);
  CHECK(set.episode_id == 3);
  CHECK(set.batch().batch() == 26);
  const auto rec = rollout(ep);
  for (std::size_t t = 0; t < rec.size(); ++t) {
    const auto clean = teacher.embed_latent(latent_features(rec[t].target, rec[t].stimulus, 0.5));
    for (std::size_t d = 0; d < kTeacherDims; ++d) CHECK(set.values[t * kTeacherDims + d] == clean[d]);
  }
  // Same (target, stimulus) -> same row; different -> different row.
  for (std::size_t t = 1; t < rec.size(); ++t) {
    const bool same = rec[t].target == rec[0].target && rec[t].stimulus == rec[0].stimulus;
    const bool equal = std::equal(set.values.begin() + t * kTeacherDims,
                                  set.values.begin() + (t + 1) * kTeacherDims, set.values.begin());
    CHECK(same == equal);
  }
}

TEST_CASE("oracle teacher noise has the configured std") {
  Rng rng(5);
  const auto noisy = OracleTeacher::random(rng, 0.05);
  Rng noise(6);
  double s2 = 0.0;
  std::size_t n = 0;
  for (int e = 0; e < 200; ++e) {
    const Episode ep = generate_episode(rng, 26, e);
    const auto set = noisy.embed(ep, noise);
    const auto rec = rollout(ep);
    for (std::size_t t = 0; t < rec.size(); ++t) {
      const auto clean = noisy.embed_latent(latent_features(rec[t].target, rec[t].stimulus, 0.5));
      for (std::size_t d = 0; d < kTeacherDims; ++d) {
        const double r = set.values[t * kTeacherDims + d] - clean[d];
        s2 += r * r;
        ++n;
      }
    }
  }
  CHECK(std::sqrt(s2 / n) == doctest::Approx(0.05).epsilon(0.03));
}

TEST_CASE("spike-pca teacher embeds every step in 7 dims") {
  Rng rng(9);
  const auto readout = SpikeReadout::random(12, rng);
  std::vector<SpikeTrace> traces;
  std::vector<Episode> eps;
  for (int e = 0; e < 6; ++e) {
    eps.push_back(generate_episode(rng, 10, e));
    traces.push_back(simulate_spikes(eps.back(), readout, rng));
  }
  const auto teacher = SpikePcaTeacher::fit(traces);
  CHECK(teacher.pca.components == kTeacherDims);
  CHECK(teacher.pca.input_dims == 12);
  const auto set = teacher.embed(traces[0], 0);
  CHECK(set.rows() == 10);
  CHECK(set.provenance == Provenance::spike_pca);
  for (double v : set.values) CHECK(std::isfinite(v));
}

TEST_CASE("noise teacher is standard normal") {
  Rng rng(3);
  const auto set = noise_teacher(2000, 7, rng, 1);
  double s1 = 0, s2 = 0;
  for (double v : set.values) {
    s1 += v;
    s2 += v * v;
  }
  const double n = static_cast<double>(set.values.size());
  CHECK(std::abs(s1 / n) < 5 / std::sqrt(n));
  CHECK(std::abs(s2 / n - 1.0) < 5 * std::sqrt(2.0 / n));
  CHECK(set.provenance == Provenance::noise);
}

TEST_CASE("memory dataset JSON round trip") {
  Rng rng(4);
  const auto teacher = OracleTeacher::random(rng);
  MemoryDataset ds;
  for (int e = 0; e < 3; ++e) {
    ds.episodes.push_back(generate_episode(rng, 5 + e, e));
    ds.teachers.push_back(teacher.embed(ds.episodes.back(), rng));
  }
  const auto back = dataset_from_json(to_json(ds));
  REQUIRE(back.episodes.size() == 3);
  CHECK(back.episodes[2].stimuli == ds.episodes[2].stimuli);
  CHECK(back.teachers[1].values == ds.teachers[1].values);
  CHECK(back.teachers[1].provenance == Provenance::oracle);

  auto bad = to_json(ds);
  bad["teachers"][0]["embeddings"].erase(0);
  CHECK_THROWS(dataset_from_json(bad));
  auto bad_schema = to_json(ds);
  bad_schema["schema"] = "other";
  CHECK_THROWS(dataset_from_json(bad_schema));
}
