#include "b2m/pca.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "b2m/error.hpp"

namespace b2m {

std::vector<double> PcaModel::transform(std::span<const double> row) const {
  if (row.size() != input_dims) {
    throw ShapeError("PcaModel::transform: expected " + std::to_string(input_dims) +
                     " dims, got " + std::to_string(row.size()));
  }
  std::vector<double> out(components, 0.0);
  for (std::size_t c = 0; c < components; ++c) {
    double acc = 0.0;
    for (std::size_t d = 0; d < input_dims; ++d)
      acc += basis[c * input_dims + d] * (row[d] - mean[d]);
    out[c] = acc;
  }
  return out;
}

std::vector<double> PcaModel::inverse_transform(std::span<const double> coords) const {
  if (coords.size() > components) {
    throw ShapeError("PcaModel::inverse_transform: too many coordinates");
  }
  std::vector<double> out(mean);
  for (std::size_t c = 0; c < coords.size(); ++c)
    for (std::size_t d = 0; d < input_dims; ++d) out[d] += coords[c] * basis[c * input_dims + d];
  return out;
}

double PcaModel::explained_ratio(std::size_t k) const {
  if (total_variance <= 0.0) return 0.0;
  double acc = 0.0;
  for (std::size_t c = 0; c < std::min(k, components); ++c) acc += explained_variance[c];
  return acc / total_variance;
}

PcaAccumulator::PcaAccumulator(std::size_t dims)
    : dims_(dims), sum_(dims, 0.0), cross_(dims * dims, 0.0) {
  if (dims == 0) throw ShapeError("PcaAccumulator: zero dims");
}

void PcaAccumulator::add(std::span<const double> row) {
  if (row.size() != dims_) {
    throw ShapeError("PcaAccumulator::add: expected " + std::to_string(dims_) + " dims, got " +
                     std::to_string(row.size()));
  }
  ++count_;
  for (std::size_t i = 0; i < dims_; ++i) {
    sum_[i] += row[i];
    for (std::size_t j = i; j < dims_; ++j) cross_[i * dims_ + j] += row[i] * row[j];
  }
}

PcaModel PcaAccumulator::fit(std::size_t components) const {
  if (count_ < 2) throw DomainError("PCA needs at least two rows");
  if (components == 0) throw ConfigError("PCA: components must be >= 1");
  const double n = static_cast<double>(count_);
  PcaModel model;
  model.input_dims = dims_;
  model.components = components;
  model.mean.resize(dims_);
  for (std::size_t i = 0; i < dims_; ++i) model.mean[i] = sum_[i] / n;

  Eigen::MatrixXd cov(dims_, dims_);
  for (std::size_t i = 0; i < dims_; ++i)
    for (std::size_t j = i; j < dims_; ++j) {
      const double c = (cross_[i * dims_ + j] - n * model.mean[i] * model.mean[j]) / (n - 1.0);
      cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c;
      cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = c;
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  const Eigen::VectorXd& evals = solver.eigenvalues();  // ascending
  const Eigen::MatrixXd& evecs = solver.eigenvectors();
  model.total_variance = std::max(0.0, cov.trace());
  const double max_eval = std::max(0.0, evals.maxCoeff());
  const double tol = max_eval * 1e-10 * static_cast<double>(dims_);

  model.basis.assign(components * dims_, 0.0);
  model.explained_variance.assign(components, 0.0);
  for (std::size_t c = 0; c < components && c < dims_; ++c) {
    const auto col = static_cast<Eigen::Index>(dims_ - 1 - c);
    const double ev = evals(col);
    if (!(ev > tol)) break;
    ++model.effective_rank;
    model.explained_variance[c] = ev;
    // Sign convention: largest-magnitude entry positive.
    Eigen::Index arg = 0;
    evecs.col(col).cwiseAbs().maxCoeff(&arg);
    const double sign = evecs(arg, col) < 0 ? -1.0 : 1.0;
    for (std::size_t d = 0; d < dims_; ++d)
      model.basis[c * dims_ + d] = sign * evecs(static_cast<Eigen::Index>(d), col);
  }
  return model;
}

PcaModel fit_pca(std::span<const double> data, std::size_t rows, std::size_t cols,
                 std::size_t components) {
  if (data.size() != rows * cols) {
    throw ShapeError("fit_pca: data holds " + std::to_string(data.size()) + " values, expected " +
                     std::to_string(rows * cols));
  }
  PcaAccumulator acc(cols);
  for (std::size_t r = 0; r < rows; ++r) acc.add(data.subspan(r * cols, cols));
  return acc.fit(components);
}

}  // namespace b2m
