#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "b2m/memory_task.hpp"
#include "b2m/rng.hpp"

namespace b2m::memory {

inline constexpr double kBinSeconds = 0.01;
inline constexpr std::size_t kPreBins = 100;
inline constexpr std::size_t kPostBins = 100;
inline constexpr std::size_t kStepBins = kPreBins + kPostBins;
inline constexpr std::size_t kFilterTaps = 41;
/// target one-hot (3) + stimulus one-hot or none (4) + within-step phase (1)
inline constexpr std::size_t kLatentDims = 8;

using LatentVector = std::array<double, kLatentDims>;

/// `stimulus` may be kNoStimulus. `phase` is in [-1, 0) before the stimulus
/// and [0, 1] after it.
LatentVector latent_features(int target, int stimulus, double phase);

/// Fixed linear readout from latent task state to firing rates:
/// rate_hz = gain_hz * softplus(weights * latent + bias).
struct SpikeReadout {
  std::size_t n_neurons = 0;
  std::vector<double> weights;  // n_neurons x kLatentDims, row-major
  std::vector<double> bias;     // n_neurons
  double gain_hz = 10.0;

  static SpikeReadout random(std::size_t n_neurons, Rng& rng, double weight_scale = 1.0,
                             double gain_hz = 10.0);
  double rate_hz(std::size_t neuron, const LatentVector& latent) const;
};

struct ReactionTimeModel {
  double log_mean = -0.5;  // median ~0.61 s
  double log_std = 0.3;
  double min_seconds = 0.3;
  double max_seconds = 2.0;
};

/// Native 10 ms spike counts for one step. The post-stimulus window covers
/// [0, reaction_time]; its last bin is partial when RT is not a multiple of
/// 10 ms.
struct StepSpikes {
  double reaction_time = 1.0;
  std::size_t native_post_bins = 0;
  std::vector<double> pre_counts;   // n_neurons x kPreBins
  std::vector<double> post_counts;  // n_neurons x native_post_bins

  /// Post-stimulus counts of one neuron expressed per full 10 ms bin.
  std::vector<double> post_rates(std::size_t neuron) const;
  std::span<const double> pre_rates(std::size_t neuron) const;
};

struct SpikeTrace {
  std::size_t n_neurons = 0;
  std::vector<StepSpikes> steps;
};

std::size_t native_post_bins(double reaction_time);

/// Poisson counts per 10 ms bin driven by `readout`. One StepSpikes per
/// episode step; the current target is the one in force when the stimulus
/// appears.
SpikeTrace simulate_spikes(const Episode& episode, const SpikeReadout& readout, Rng& rng,
                           const ReactionTimeModel& rt = {});

/// Resamples the post-stimulus window [0, RT] onto exactly 100 bins by
/// overlap-weighted averaging (integrated rate is conserved) and prepends the
/// 100 pre-stimulus bins.
std::array<double, kStepBins> normalize_and_concat(std::span<const double> pre_rates,
                                                   std::span<const double> post_rates,
                                                   double reaction_time);

/// 20 zeros followed by exp(-0.5 x) for x = 0, 0.5, ..., 10.
const std::array<double, kFilterTaps>& exp_filter_kernel();

/// Causal convolution out[t] = sum_k kernel[k] * in[t - k], in[<0] = 0.
std::vector<double> exp_filter(std::span<const double> rates);

/// normalize_and_concat followed by exp_filter for every neuron of a step;
/// n_neurons x kStepBins row-major.
std::vector<double> preprocess_step(const StepSpikes& step, std::size_t n_neurons);

}  // namespace b2m::memory
