#pragma once

// Independent reference implementations used to validate the library. None of
// these call into the code they check, except for reading tensor values.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "b2m/autodiff.hpp"
#include "b2m/students.hpp"

namespace b2m::testing {

struct GradCheck {
  double max_rel_error = 0.0;
  std::string worst;  // "leaf k[i]"
  std::size_t checked = 0;
};

/// Central finite differences of the scalar `f()` with respect to every
/// element of every leaf, compared with the reverse-mode gradient.
/// rel = |analytic - numeric| / max(|analytic|, |numeric|, floor).
GradCheck grad_check(const std::function<ad::Tensor()>& f, std::vector<ad::Tensor> leaves,
                     double h = 1e-5, double floor = 1e-3);

/// Contrastive loss by the textbook double loop: for each anchor row i of the
/// teacher, -log(exp(S_ii) / sum_j exp(S_ij)) with S_ij = <t_i, m_j> / tau.
double naive_contrastive(const std::vector<double>& teacher, const std::vector<double>& model,
                         std::size_t rows, std::size_t dims, double tau);

/// One-sided Mann-Whitney p-value by brute force: relabels the pooled sample
/// in every possible way and counts U (pairwise wins, ties 1/2) >= observed.
double enumerate_rank_sum_p(const std::vector<double>& a, const std::vector<double>& b);

/// Plain-loop Adam for a single parameter vector over a list of gradients.
std::vector<double> reference_adam(std::vector<double> theta,
                                   const std::vector<std::vector<double>>& grads, double lr,
                                   double b1, double b2, double eps);

/// Plain-loop GRU forward in eval mode from named parameters; returns
/// predictions then embeddings, both row-major.
struct ReferenceGru {
  std::vector<double> predictions;
  std::vector<double> embeddings;
};
ReferenceGru reference_gru(const GruStudent& model, std::span<const double> one_hot,
                           std::size_t steps);

/// Sum of the exponential filter taps, closed form of the geometric series.
double kernel_sum_closed_form();

struct GradCase {
  std::string name;
  std::function<ad::Tensor()> f;
  std::vector<ad::Tensor> leaves;
};

/// Every differentiable op, every loss and both students on tiny configs,
/// each reduced to a scalar through random constant weights.
std::vector<GradCase> gradient_cases(std::uint64_t seed);

}  // namespace b2m::testing
