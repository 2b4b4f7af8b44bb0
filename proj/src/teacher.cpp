#include "b2m/teacher.hpp"

#include <cmath>
#include <iostream>
#include <numeric>

#include "b2m/error.hpp"

namespace b2m::memory {

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::oracle: return "oracle";
    case Provenance::spike_pca: return "spike-pca";
    case Provenance::noise: return "noise";
  }
  return "oracle";
}

Provenance provenance_from_string(const std::string& name) {
  if (name == "oracle") return Provenance::oracle;
  if (name == "spike-pca") return Provenance::spike_pca;
  if (name == "noise") return Provenance::noise;
  throw ConfigError("unknown teacher provenance '" + name + "'");
}

std::vector<std::int64_t> TeacherEmbeddingSet::step_ids() const {
  std::vector<std::int64_t> ids(rows());
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

EmbeddingBatch TeacherEmbeddingSet::batch() const {
  return EmbeddingBatch::teacher(rows(), dims, values, step_ids());
}

OracleTeacher OracleTeacher::random(Rng& rng, double sigma, std::size_t dims) {
  if (sigma < 0.0) throw ConfigError("oracle teacher sigma must be >= 0");
  OracleTeacher t;
  t.dims = dims;
  t.sigma = sigma;
  t.weights.resize(dims * kLatentDims);
  for (auto& w : t.weights) w = rng.normal();
  t.bias.resize(dims);
  for (auto& b : t.bias) b = rng.normal(0.0, 0.1);
  return t;
}

std::vector<double> OracleTeacher::embed_latent(const LatentVector& latent) const {
  std::vector<double> out(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    double acc = bias[d];
    for (std::size_t k = 0; k < kLatentDims; ++k) acc += weights[d * kLatentDims + k] * latent[k];
    out[d] = std::tanh(acc);
  }
  return out;
}

TeacherEmbeddingSet OracleTeacher::embed(const Episode& episode, Rng& noise_rng) const {
  TeacherEmbeddingSet set;
  set.episode_id = episode.id;
  set.dims = dims;
  set.provenance = Provenance::oracle;
  set.values.reserve(episode.length() * dims);
  for (const auto& rec : rollout(episode)) {
    // One row per step: the state at stimulus onset, mid-step phase.
    const auto row = embed_latent(latent_features(rec.target, rec.stimulus, 0.5));
    for (double v : row) set.values.push_back(sigma > 0.0 ? v + sigma * noise_rng.normal() : v);
  }
  return set;
}

SpikePcaTeacher SpikePcaTeacher::fit(const std::vector<SpikeTrace>& training_traces,
                                     std::size_t dims) {
  if (training_traces.empty()) throw DomainError("spike-pca teacher: no training traces");
  const std::size_t n = training_traces.front().n_neurons;
  if (n < dims) {
    throw DomainError("spike-pca teacher needs at least " + std::to_string(dims) +
                      " neurons, got " + std::to_string(n));
  }
  PcaAccumulator acc(n);
  std::vector<double> bin(n);
  for (const auto& trace : training_traces) {
    if (trace.n_neurons != n) throw ShapeError("spike-pca teacher: neuron count differs across traces");
    for (const auto& step : trace.steps) {
      const auto filtered = preprocess_step(step, n);
      for (std::size_t t = 0; t < kStepBins; ++t) {
        for (std::size_t i = 0; i < n; ++i) bin[i] = filtered[i * kStepBins + t];
        acc.add(bin);
      }
    }
  }
  SpikePcaTeacher teacher{acc.fit(dims)};
  if (teacher.pca.rank_deficient()) {
    std::cerr << "warning: spike-pca teacher data has rank " << teacher.pca.effective_rank
              << " < " << dims << "; missing components are zero-padded\n";
  }
  return teacher;
}

TeacherEmbeddingSet SpikePcaTeacher::embed(const SpikeTrace& trace, std::int64_t episode_id) const {
  const std::size_t n = trace.n_neurons;
  if (n != pca.input_dims) {
    throw ShapeError("spike-pca teacher fitted on " + std::to_string(pca.input_dims) +
                     " neurons, trace has " + std::to_string(n));
  }
  TeacherEmbeddingSet set;
  set.episode_id = episode_id;
  set.dims = pca.components;
  set.provenance = Provenance::spike_pca;
  std::vector<double> mean_bin(n);
  for (const auto& step : trace.steps) {
    const auto filtered = preprocess_step(step, n);
    // The projection is affine, so averaging bins first is exact.
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t t = 0; t < kStepBins; ++t) acc += filtered[i * kStepBins + t];
      mean_bin[i] = acc / static_cast<double>(kStepBins);
    }
    const auto row = pca.transform(mean_bin);
    set.values.insert(set.values.end(), row.begin(), row.end());
  }
  return set;
}

TeacherEmbeddingSet noise_teacher(std::size_t rows, std::size_t dims, Rng& rng,
                                  std::int64_t episode_id) {
  TeacherEmbeddingSet set;
  set.episode_id = episode_id;
  set.dims = dims;
  set.provenance = Provenance::noise;
  set.values.resize(rows * dims);
  for (auto& v : set.values) v = rng.normal();
  return set;
}

}  // namespace b2m::memory
