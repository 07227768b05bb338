// 3x3 block sparse matrix whose blocks all live on the spline pattern.
#pragma once

#include "pcaopt/spline_space.hpp"

#include <array>
#include <vector>

namespace pcaopt {

class BlockMatrix {
 public:
  BlockMatrix() = default;
  explicit BlockMatrix(const Pattern& pattern);

  [[nodiscard]] int block_rows() const { return n_; }
  [[nodiscard]] bool has(int bi, int bj) const { return present_[static_cast<std::size_t>(bi * 3 + bj)]; }
  /// Values of block (bi, bj); allocates a zero block on first use.
  std::vector<double>& block(int bi, int bj);
  [[nodiscard]] const std::vector<double>& block(int bi, int bj) const;
  void clear();

  /// y = A x. `parallel` selects the OpenMP row loop; results are identical.
  void apply(const Vec& x, Vec& y, bool parallel = true) const;
  /// y = |A| |x| entrywise; used for round-off scales.
  void apply_abs(const Vec& x, Vec& y) const;
  [[nodiscard]] Vec diagonal() const;

  /// Replaces rows and columns of field `field` flagged in `mask` by identity.
  void constrain(int field, const std::vector<char>& mask);

  /// Dense copy, for tests on small grids.
  [[nodiscard]] Eigen::MatrixXd to_dense() const;

 private:
  const Pattern* pattern_ = nullptr;
  int n_ = 0;
  std::array<bool, 9> present_{};
  std::array<std::vector<double>, 9> values_;
};

/// vals = a*x + b*y on the pattern (either input may be null).
void combine(std::vector<double>& vals, double a, const std::vector<double>* x, double b,
             const std::vector<double>* y);
void axpy(std::vector<double>& vals, double a, const std::vector<double>& x);

}  // namespace pcaopt
