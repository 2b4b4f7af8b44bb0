#include "b2m/adam.hpp"

#include <cmath>

#include "b2m/error.hpp"

namespace b2m {

AdamState AdamState::for_sizes(std::span<const std::size_t> param_sizes, AdamHyper hyper) {
  AdamState s;
  s.hyper = hyper;
  for (auto n : param_sizes) {
    s.first_moment.emplace_back(n, 0.0);
    s.second_moment.emplace_back(n, 0.0);
  }
  return s;
}

void adam_step(std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " params, " +
                     std::to_string(grads.size()) + " grads, " +
                     std::to_string(state.first_moment.size()) + " state slots");
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (params[p].size() != grads[p].size() ||
        params[p].size() != state.first_moment[p].size()) {
      throw ShapeError("adam_step: parameter " + std::to_string(p) + " has " +
                       std::to_string(params[p].size()) + " values but grad has " +
                       std::to_string(grads[p].size()));
    }
  }
  const auto& h = state.hyper;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c2 = 1.0 - std::pow(h.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& m = state.first_moment[p];
    auto& v = state.second_moment[p];
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double g = grads[p][i];
      m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g;
      v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g * g;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      params[p][i] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
    }
  }
}

Adam::Adam(std::vector<ad::Tensor> params, AdamHyper hyper) : params_(std::move(params)) {
  std::vector<std::size_t> sizes;
  for (const auto& p : params_) {
    if (!p.requires_grad()) throw ConfigError("Adam: parameter is not tracked");
    sizes.push_back(p.size());
  }
  state_ = AdamState::for_sizes(sizes, hyper);
}

void Adam::step() {
  std::vector<std::vector<double>> zero_storage;
  for (const auto& p : params_) {
    if (!p.has_grad()) zero_storage.emplace_back(p.size(), 0.0);
  }
  std::vector<std::span<double>> values;
  std::vector<std::span<const double>> grads;
  std::size_t z = 0;
  for (auto& p : params_) {
    values.push_back(p.mutable_values());
    grads.push_back(p.has_grad() ? p.grad() : std::span<const double>(zero_storage[z++]));
  }
  adam_step(values, grads, state_);
  zero_grad();
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace b2m
