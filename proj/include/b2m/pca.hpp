#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace b2m {

/// Principal axes of a data cloud. Components beyond the data's numerical
/// rank are zero rows (and project to 0).
struct PcaModel {
  std::size_t input_dims = 0;
  std::size_t components = 0;
  std::size_t effective_rank = 0;
  std::vector<double> mean;                // input_dims
  std::vector<double> basis;               // components x input_dims, row-major
  std::vector<double> explained_variance;  // components, descending
  double total_variance = 0.0;

  bool rank_deficient() const { return effective_rank < components; }
  std::vector<double> transform(std::span<const double> row) const;
  std::vector<double> inverse_transform(std::span<const double> coords) const;
  /// Fraction of total variance captured by the first k components.
  double explained_ratio(std::size_t k) const;
};

/// Streaming first/second-moment accumulator, so fits over millions of
/// time bins never hold the raw matrix.
class PcaAccumulator {
 public:
  explicit PcaAccumulator(std::size_t dims);
  void add(std::span<const double> row);
  std::size_t count() const { return count_; }
  PcaModel fit(std::size_t components) const;

 private:
  std::size_t dims_;
  std::size_t count_ = 0;
  std::vector<double> sum_;
  std::vector<double> cross_;  // dims x dims
};

/// `data` is rows x cols row-major.
PcaModel fit_pca(std::span<const double> data, std::size_t rows, std::size_t cols,
                 std::size_t components);

}  // namespace b2m
