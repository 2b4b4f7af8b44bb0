#include <doctest.h>

#include <cmath>

#include "b2m/error.hpp"
#include "b2m/pca.hpp"
#include "b2m/rng.hpp"

using namespace b2m;

namespace {

// Leading eigenvector of a covariance by power iteration.
std::vector<double> power_iteration(const std::vector<double>& cov, std::size_t d) {
  std::vector<double> v(d, 1.0);
  for (int it = 0; it < 2000; ++it) {
    std::vector<double> w(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) w[i] += cov[i * d + j] * v[j];
    }
    double n = 0.0;
    for (double x : w) n += x * x;
    n = std::sqrt(n);
    for (std::size_t i = 0; i < d; ++i) v[i] = w[i] / n;
  }
  return v;
}

}  // namespace

TEST_CASE("PCA matches power iteration and reconstructs full-rank data") {
  Rng rng(21);
  const std::size_t rows = 400, d = 4;
  std::vector<double> data(rows * d);
  const double scales[4] = {3.0, 1.5, 0.7, 0.2};
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < d; ++c) data[r * d + c] = scales[c] * rng.normal() + c;
  }
  // Mix the axes so the principal directions are not the coordinates.
  for (std::size_t r = 0; r < rows; ++r) {
    double* x = &data[r * d];
    const double a = x[0], b = x[1];
    x[0] = 0.8 * a - 0.6 * b;
    x[1] = 0.6 * a + 0.8 * b;
  }
  const PcaModel m = fit_pca(data, rows, d, d);
  CHECK(m.effective_rank == 4);
  CHECK_FALSE(m.rank_deficient());
  for (std::size_t k = 1; k < d; ++k) CHECK(m.explained_variance[k - 1] >= m.explained_variance[k]);
  CHECK(m.explained_ratio(d) == doctest::Approx(1.0));

  std::vector<double> mean(d, 0.0), cov(d * d, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < d; ++c) mean[c] += data[r * d + c] / rows;
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        cov[i * d + j] += (data[r * d + i] - mean[i]) * (data[r * d + j] - mean[j]) / (rows - 1);
      }
    }
  }
  const auto v = power_iteration(cov, d);
  double dot = 0.0;
  for (std::size_t c = 0; c < d; ++c) dot += v[c] * m.basis[c];
  CHECK(std::abs(dot) == doctest::Approx(1.0).epsilon(1e-8));

  for (std::size_t r = 0; r < 10; ++r) {
    const std::span<const double> row(&data[r * d], d);
    const auto back = m.inverse_transform(m.transform(row));
    for (std::size_t c = 0; c < d; ++c) CHECK(back[c] == doctest::Approx(row[c]).epsilon(1e-10));
  }
}

TEST_CASE("streaming accumulator equals the batch fit") {
  Rng rng(2);
  const std::size_t rows = 100, d = 5;
  std::vector<double> data(rows * d);
  for (auto& x : data) x = rng.normal();
  PcaAccumulator acc(d);
  for (std::size_t r = 0; r < rows; ++r) acc.add(std::span<const double>(&data[r * d], d));
  const PcaModel a = acc.fit(3), b = fit_pca(data, rows, d, 3);
  CHECK(acc.count() == rows);
  for (std::size_t i = 0; i < a.basis.size(); ++i) CHECK(a.basis[i] == doctest::Approx(b.basis[i]).epsilon(1e-10));
}

TEST_CASE("rank-deficient data zero-pads extra components") {
  Rng rng(6);
  const std::size_t rows = 50, d = 4;
  std::vector<double> data(rows * d);
  for (std::size_t r = 0; r < rows; ++r) {
    const double t = rng.normal(), u = rng.normal();
    data[r * d + 0] = t;
    data[r * d + 1] = 2 * t;
    data[r * d + 2] = u;
    data[r * d + 3] = t - u;
  }
  const PcaModel m = fit_pca(data, rows, d, 4);
  CHECK(m.effective_rank == 2);
  CHECK(m.rank_deficient());
  const auto coords = m.transform(std::span<const double>(data.data(), d));
  CHECK(coords[2] == 0.0);
  CHECK(coords[3] == 0.0);
  for (std::size_t i = 2 * d; i < 4 * d; ++i) CHECK(m.basis[i] == 0.0);
}

TEST_CASE("PCA input errors") {
  std::vector<double> data(6, 1.0);
  CHECK_THROWS_AS(fit_pca(data, 2, 3, 0), ConfigError);
  CHECK_THROWS_AS(fit_pca(std::span<const double>(data).first(3), 1, 3, 1), DomainError);
  CHECK_THROWS_AS(fit_pca(data, 3, 3, 1), ShapeError);
  PcaAccumulator acc(3);
  CHECK_THROWS_AS(acc.add(std::vector<double>(2)), ShapeError);
}
