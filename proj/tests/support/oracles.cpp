#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace b2m::testing {

GradCheck grad_check(const std::function<ad::Tensor()>& f, std::vector<ad::Tensor> leaves,
                     double h, double floor) {
  for (auto& leaf : leaves) leaf.zero_grad();
  ad::backward(f());
  std::vector<std::vector<double>> analytic;
  for (auto& leaf : leaves) {
    std::vector<double> g(leaf.size(), 0.0);
    if (leaf.has_grad()) std::copy(leaf.grad().begin(), leaf.grad().end(), g.begin());
    analytic.push_back(std::move(g));
    leaf.zero_grad();
  }

  GradCheck out;
  ad::NoGradGuard guard;
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    auto values = leaves[k].mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double keep = values[i];
      values[i] = keep + h;
      const double up = f().item();
      values[i] = keep - h;
      const double down = f().item();
      values[i] = keep;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[k][i];
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      ++out.checked;
      if (rel > out.max_rel_error || std::isnan(rel)) {
        out.max_rel_error = std::isnan(rel) ? INFINITY : rel;
        out.worst = "leaf " + std::to_string(k) + "[" + std::to_string(i) + "]";
      }
    }
  }
  return out;
}

double naive_contrastive(const std::vector<double>& teacher, const std::vector<double>& model,
                         std::size_t rows, std::size_t dims, double tau) {
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    double numerator = 0.0;
    double denominator = 0.0;
    for (std::size_t j = 0; j < rows; ++j) {
      double dot = 0.0;
      for (std::size_t d = 0; d < dims; ++d) dot += teacher[i * dims + d] * model[j * dims + d];
      const double e = std::exp(dot / tau);
      denominator += e;
      if (i == j) numerator = e;
    }
    total += -std::log(numerator / denominator);
  }
  return total;
}

namespace {

double pairwise_u(const std::vector<double>& a, const std::vector<double>& b) {
  double u = 0.0;
  for (double x : a) {
    for (double y : b) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
  }
  return u;
}

}  // namespace

double enumerate_rank_sum_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = a.size(), total = pooled.size();
  const double observed = pairwise_u(a, b);
  // Every assignment of n pooled positions to group a, via a selection mask.
  std::vector<bool> pick(total, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(n), true);
  std::size_t count = 0, hits = 0;
  do {
    std::vector<double> ga, gb;
    for (std::size_t i = 0; i < total; ++i) (pick[i] ? ga : gb).push_back(pooled[i]);
    ++count;
    if (pairwise_u(ga, gb) >= observed - 1e-9) ++hits;
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return static_cast<double>(hits) / static_cast<double>(count);
}

std::vector<double> reference_adam(std::vector<double> theta,
                                   const std::vector<std::vector<double>>& grads, double lr,
                                   double b1, double b2, double eps) {
  std::vector<double> m(theta.size(), 0.0), v(theta.size(), 0.0);
  for (std::size_t t = 1; t <= grads.size(); ++t) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double g = grads[t - 1][i];
      m[i] = b1 * m[i] + (1 - b1) * g;
      v[i] = b2 * v[i] + (1 - b2) * g * g;
      const double mhat = m[i] / (1 - std::pow(b1, static_cast<double>(t)));
      const double vhat = v[i] / (1 - std::pow(b2, static_cast<double>(t)));
      theta[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
  return theta;
}

ReferenceGru reference_gru(const GruStudent& model, std::span<const double> one_hot,
                           std::size_t steps) {
  std::map<std::string, std::vector<double>> p;
  for (const auto& np : model.parameters()) {
    p[np.name].assign(np.tensor.values().begin(), np.tensor.values().end());
  }
  const auto& cfg = model.config();
  const std::size_t in = cfg.input_size, h = cfg.hidden_size, e = cfg.embedding_dim;
  auto sig = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  // W is in x H row-major, U is H x H row-major: pre_j = sum_i x_i W_ij + sum_i h_i U_ij + b_j.
  auto affine = [&](const std::string& w, const std::string& u, const std::string& b,
                    const double* x, const std::vector<double>& state, std::size_t j) {
    double acc = p[b][j];
    for (std::size_t i = 0; i < in; ++i) acc += x[i] * p[w][i * h + j];
    for (std::size_t i = 0; i < h; ++i) acc += state[i] * p[u][i * h + j];
    return acc;
  };

  ReferenceGru out;
  std::vector<double> state(h, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    const double* x = one_hot.data() + t * in;
    std::vector<double> z(h), r(h), rh(h), next(h);
    for (std::size_t j = 0; j < h; ++j) {
      z[j] = sig(affine("gru.w_update", "gru.u_update", "gru.b_update", x, state, j));
      r[j] = sig(affine("gru.w_reset", "gru.u_reset", "gru.b_reset", x, state, j));
    }
    for (std::size_t j = 0; j < h; ++j) rh[j] = r[j] * state[j];
    for (std::size_t j = 0; j < h; ++j) {
      const double cand =
          std::tanh(affine("gru.w_candidate", "gru.u_candidate", "gru.b_candidate", x, rh, j));
      next[j] = (1.0 - z[j]) * state[j] + z[j] * cand;
    }
    state = next;
    double logit = p["out.bias"][0];
    for (std::size_t k = 0; k < e; ++k) {
      double emb = p["embed.bias"][k];
      for (std::size_t j = 0; j < h; ++j) emb += state[j] * p["embed.weight"][j * e + k];
      out.embeddings.push_back(emb);
      logit += emb * p["out.weight"][k];
    }
    out.predictions.push_back(2.0 * cfg.output_range * sig(logit) - cfg.output_range);
  }
  return out;
}

double kernel_sum_closed_form() {
  const double q = std::exp(-0.25);
  return (1.0 - std::pow(q, 21.0)) / (1.0 - q);
}

}  // namespace b2m::testing
