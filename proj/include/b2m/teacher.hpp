#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "b2m/losses.hpp"
#include "b2m/memory_task.hpp"
#include "b2m/pca.hpp"
#include "b2m/rng.hpp"
#include "b2m/spikes.hpp"

namespace b2m::memory {

inline constexpr std::size_t kTeacherDims = 7;

enum class Provenance { oracle, spike_pca, noise };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& name);

/// One teacher row per episode step; row i belongs to step i.
struct TeacherEmbeddingSet {
  std::int64_t episode_id = 0;
  std::size_t dims = kTeacherDims;
  Provenance provenance = Provenance::oracle;
  std::vector<double> values;  // rows x dims

  std::size_t rows() const { return dims == 0 ? 0 : values.size() / dims; }
  std::vector<std::int64_t> step_ids() const;
  EmbeddingBatch batch() const;
};

/// Informative teacher: tanh of a fixed random linear map of the latent task
/// state, plus Gaussian noise of std `sigma`.
struct OracleTeacher {
  std::size_t dims = kTeacherDims;
  double sigma = 0.05;
  std::vector<double> weights;  // dims x kLatentDims
  std::vector<double> bias;     // dims

  static OracleTeacher random(Rng& rng, double sigma = 0.05, std::size_t dims = kTeacherDims);

  /// Noise-free embedding of a latent feature vector.
  std::vector<double> embed_latent(const LatentVector& latent) const;
  TeacherEmbeddingSet embed(const Episode& episode, Rng& noise_rng) const;
};

/// PCA stand-in for a learned neural embedding: fit on filtered rate vectors
/// of training steps (rows = time bins, cols = neurons), project onto the top
/// components, average over the step's bins.
struct SpikePcaTeacher {
  PcaModel pca;

  static SpikePcaTeacher fit(const std::vector<SpikeTrace>& training_traces,
                             std::size_t dims = kTeacherDims);
  TeacherEmbeddingSet embed(const SpikeTrace& trace, std::int64_t episode_id) const;
};

/// i.i.d. N(0, 1) entries.
TeacherEmbeddingSet noise_teacher(std::size_t rows, std::size_t dims, Rng& rng,
                                  std::int64_t episode_id = 0);

}  // namespace b2m::memory
