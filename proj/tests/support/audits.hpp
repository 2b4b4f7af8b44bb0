#pragma once

// Counters over large randomized sweeps of the simulator and preprocessing.

#include <cstddef>
#include <cstdint>

namespace b2m::testing {

struct SimulatorAudit {
  std::size_t steps = 0;
  std::size_t accepts = 0;
  std::size_t switches = 0;
  std::size_t target_outside_pair = 0;
  std::size_t switch_without_accept = 0;
  std::size_t accept_without_switch = 0;
  std::size_t distractor_as_target = 0;
  std::size_t violations() const {
    return target_outside_pair + switch_without_accept + accept_without_switch +
           distractor_as_target;
  }
};

/// Rolls out random episodes until at least `min_steps` steps were seen and
/// re-derives every invariant from the raw records.
SimulatorAudit audit_simulator(std::uint64_t seed, std::size_t min_steps);

struct PreprocessAudit {
  double max_impulse_error = 0.0;
  std::size_t trials = 0;
  std::size_t wrong_length = 0;
  double max_mass_error = 0.0;
};

/// Impulse response of the causal filter against the tap formula, and RT
/// normalization of random count vectors (random RTs, including exact bin
/// multiples) against spike-count conservation.
PreprocessAudit audit_preprocessing(std::uint64_t seed, std::size_t trials);

}  // namespace b2m::testing
