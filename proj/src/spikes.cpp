#include "b2m/spikes.hpp"

#include <algorithm>
#include <cmath>

#include "b2m/error.hpp"

namespace b2m::memory {

namespace {

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

}  // namespace

LatentVector latent_features(int target, int stimulus, double phase) {
  LatentVector f{};
  if (target < 0 || target >= kNumStimuli) {
    throw DomainError("latent_features: target " + std::to_string(target));
  }
  if (stimulus < 0 || stimulus > kNoStimulus) {
    throw DomainError("latent_features: stimulus " + std::to_string(stimulus));
  }
  f[static_cast<std::size_t>(target)] = 1.0;
  f[3 + static_cast<std::size_t>(stimulus)] = 1.0;
  f[7] = phase;
  return f;
}

SpikeReadout SpikeReadout::random(std::size_t n_neurons, Rng& rng, double weight_scale,
                                  double gain_hz) {
  SpikeReadout r;
  r.n_neurons = n_neurons;
  r.gain_hz = gain_hz;
  r.weights.resize(n_neurons * kLatentDims);
  for (auto& w : r.weights) w = weight_scale * rng.normal();
  r.bias.resize(n_neurons);
  for (auto& b : r.bias) b = rng.normal(0.0, 0.5);
  return r;
}

double SpikeReadout::rate_hz(std::size_t neuron, const LatentVector& latent) const {
  double acc = bias[neuron];
  const double* w = weights.data() + neuron * kLatentDims;
  for (std::size_t k = 0; k < kLatentDims; ++k) acc += w[k] * latent[k];
  return gain_hz * softplus(acc);
}

std::size_t native_post_bins(double reaction_time) {
  if (!(reaction_time > 0.0) || !std::isfinite(reaction_time)) {
    throw DomainError("reaction time must be > 0, got " + std::to_string(reaction_time));
  }
  // Tolerance keeps e.g. 0.5 / 0.01 = 50.000000000000007 at 50 bins.
  return static_cast<std::size_t>(std::ceil(reaction_time / kBinSeconds - 1e-9));
}

std::vector<double> StepSpikes::post_rates(std::size_t neuron) const {
  std::vector<double> out(native_post_bins);
  const double* counts = post_counts.data() + neuron * native_post_bins;
  for (std::size_t i = 0; i < native_post_bins; ++i) {
    const double width =
        std::min(kBinSeconds, reaction_time - static_cast<double>(i) * kBinSeconds);
    out[i] = counts[i] * (kBinSeconds / width);
  }
  return out;
}

std::span<const double> StepSpikes::pre_rates(std::size_t neuron) const {
  return std::span<const double>(pre_counts).subspan(neuron * kPreBins, kPreBins);
}

SpikeTrace simulate_spikes(const Episode& episode, const SpikeReadout& readout, Rng& rng,
                           const ReactionTimeModel& rt) {
  const auto records = rollout(episode);
  const std::size_t n = readout.n_neurons;
  SpikeTrace trace;
  trace.n_neurons = n;
  trace.steps.reserve(records.size());
  for (const auto& rec : records) {
    StepSpikes step;
    step.reaction_time =
        std::clamp(std::exp(rng.normal(rt.log_mean, rt.log_std)), rt.min_seconds, rt.max_seconds);
    step.native_post_bins = native_post_bins(step.reaction_time);
    step.pre_counts.resize(n * kPreBins);
    step.post_counts.resize(n * step.native_post_bins);
    for (std::size_t b = 0; b < kPreBins; ++b) {
      const double phase = -1.0 + (static_cast<double>(b) + 0.5) / kPreBins;
      const auto latent = latent_features(rec.target, kNoStimulus, phase);
      for (std::size_t i = 0; i < n; ++i) {
        step.pre_counts[i * kPreBins + b] =
            static_cast<double>(rng.poisson(readout.rate_hz(i, latent) * kBinSeconds));
      }
    }
    for (std::size_t b = 0; b < step.native_post_bins; ++b) {
      const double start = static_cast<double>(b) * kBinSeconds;
      const double width = std::min(kBinSeconds, step.reaction_time - start);
      const double phase = (start + 0.5 * width) / step.reaction_time;
      const auto latent = latent_features(rec.target, rec.stimulus, phase);
      for (std::size_t i = 0; i < n; ++i) {
        step.post_counts[i * step.native_post_bins + b] =
            static_cast<double>(rng.poisson(readout.rate_hz(i, latent) * width));
      }
    }
    trace.steps.push_back(std::move(step));
  }
  return trace;
}

std::array<double, kStepBins> normalize_and_concat(std::span<const double> pre_rates,
                                                   std::span<const double> post_rates,
                                                   double reaction_time) {
  const std::size_t native = native_post_bins(reaction_time);
  if (pre_rates.size() != kPreBins) {
    throw ShapeError("normalize_and_concat: expected 100 pre-stimulus bins, got " +
                     std::to_string(pre_rates.size()));
  }
  if (post_rates.size() != native) {
    throw ShapeError("normalize_and_concat: RT " + std::to_string(reaction_time) + " s needs " +
                     std::to_string(native) + " native bins, got " +
                     std::to_string(post_rates.size()));
  }
  std::array<double, kStepBins> out{};
  std::copy(pre_rates.begin(), pre_rates.end(), out.begin());
  // Native bin i spans [i*dt, min((i+1)*dt, RT)]; output bin j spans
  // [j*RT/100, (j+1)*RT/100]. Each output is the time-average of the rate.
  const double out_width = reaction_time / kPostBins;
  std::size_t i = 0;
  for (std::size_t j = 0; j < kPostBins; ++j) {
    const double lo = static_cast<double>(j) * out_width;
    const double hi = j + 1 == kPostBins ? reaction_time : static_cast<double>(j + 1) * out_width;
    while (i + 1 < native && static_cast<double>(i + 1) * kBinSeconds <= lo) ++i;
    double acc = 0.0;
    for (std::size_t k = i; k < native; ++k) {
      const double nlo = static_cast<double>(k) * kBinSeconds;
      if (nlo >= hi) break;
      const double nhi = std::min(static_cast<double>(k + 1) * kBinSeconds, reaction_time);
      const double overlap = std::min(hi, nhi) - std::max(lo, nlo);
      if (overlap > 0.0) acc += post_rates[k] * overlap;
    }
    out[kPreBins + j] = acc / (hi - lo);
  }
  return out;
}

const std::array<double, kFilterTaps>& exp_filter_kernel() {
  static const std::array<double, kFilterTaps> kernel = [] {
    std::array<double, kFilterTaps> k{};
    for (std::size_t i = 0; i <= 20; ++i) k[20 + i] = std::exp(-0.5 * (0.5 * static_cast<double>(i)));
    return k;
  }();
  return kernel;
}

std::vector<double> exp_filter(std::span<const double> rates) {
  const auto& kernel = exp_filter_kernel();
  std::vector<double> out(rates.size(), 0.0);
  for (std::size_t t = 0; t < rates.size(); ++t) {
    double acc = 0.0;
    const std::size_t taps = std::min(kFilterTaps, t + 1);
    for (std::size_t k = 0; k < taps; ++k) acc += kernel[k] * rates[t - k];
    out[t] = acc;
  }
  return out;
}

std::vector<double> preprocess_step(const StepSpikes& step, std::size_t n_neurons) {
  std::vector<double> out(n_neurons * kStepBins);
  for (std::size_t i = 0; i < n_neurons; ++i) {
    const auto post = step.post_rates(i);
    const auto concat = normalize_and_concat(step.pre_rates(i), post, step.reaction_time);
    const auto filtered = exp_filter(concat);
    std::copy(filtered.begin(), filtered.end(), out.begin() + static_cast<std::ptrdiff_t>(i * kStepBins));
  }
  return out;
}

}  // namespace b2m::memory
