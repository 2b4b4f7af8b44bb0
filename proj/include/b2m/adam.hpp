#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "b2m/autodiff.hpp"

namespace b2m {

struct AdamHyper {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamHyper hyper;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step = 0;

  /// Zeroed accumulators shaped like `param_sizes`.
  static AdamState for_sizes(std::span<const std::size_t> param_sizes, AdamHyper hyper);
};

/// One bias-corrected Adam update of raw parameter buffers.
void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state);

/// Adam over a fixed list of tracked tensors. `step()` reads their grads
/// (treating a missing grad as zero) and then zeroes them.
class Adam {
 public:
  Adam(std::vector<ad::Tensor> params, AdamHyper hyper);

  void step();
  void zero_grad();

  const AdamState& state() const { return state_; }
  AdamState& state() { return state_; }

 private:
  std::vector<ad::Tensor> params_;
  AdamState state_;
};

}  // namespace b2m
