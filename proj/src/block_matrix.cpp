#include "pcaopt/block_matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace pcaopt {

BlockMatrix::BlockMatrix(const Pattern& pattern) : pattern_(&pattern), n_(pattern.rows()) {}

std::vector<double>& BlockMatrix::block(int bi, int bj) {
  const auto k = static_cast<std::size_t>(bi * 3 + bj);
  if (!present_[k]) {
    present_[k] = true;
    values_[k].assign(pattern_->nnz(), 0.0);
  }
  return values_[k];
}

const std::vector<double>& BlockMatrix::block(int bi, int bj) const {
  const auto k = static_cast<std::size_t>(bi * 3 + bj);
  if (!present_[k]) throw std::logic_error("block not present");
  return values_[k];
}

void BlockMatrix::clear() {
  for (std::size_t k = 0; k < 9; ++k) {
    if (present_[k]) std::fill(values_[k].begin(), values_[k].end(), 0.0);
  }
}

void BlockMatrix::apply(const Vec& x, Vec& y, bool parallel) const {
  const int n = n_;
  y.resize(3 * n);
  const int* rp = pattern_->row_ptr.data();
  const int* col = pattern_->col.data();
  // per block row, the present blocks and the matching x segments
  const double* v[3][3];
  const double* xs[3][3];
  int cnt[3] = {0, 0, 0};
  for (int bi = 0; bi < 3; ++bi) {
    for (int bj = 0; bj < 3; ++bj) {
      const auto k = static_cast<std::size_t>(bi * 3 + bj);
      if (!present_[k]) continue;
      v[bi][cnt[bi]] = values_[k].data();
      xs[bi][cnt[bi]] = x.data() + static_cast<std::ptrdiff_t>(bj) * n;
      ++cnt[bi];
    }
  }

#pragma omp parallel for schedule(static) if (parallel)
  for (int i = 0; i < n; ++i) {
    const int k0 = rp[i], k1 = rp[i + 1];
    for (int bi = 0; bi < 3; ++bi) {
      const double* const* vb = v[bi];
      const double* const* xb = xs[bi];
      double s = 0.0;
      switch (cnt[bi]) {
        case 1:
          for (int k = k0; k < k1; ++k) s += vb[0][k] * xb[0][col[k]];
          break;
        case 2:
          for (int k = k0; k < k1; ++k) {
            const int c = col[k];
            s += vb[0][k] * xb[0][c] + vb[1][k] * xb[1][c];
          }
          break;
        case 3:
          for (int k = k0; k < k1; ++k) {
            const int c = col[k];
            s += vb[0][k] * xb[0][c] + vb[1][k] * xb[1][c] + vb[2][k] * xb[2][c];
          }
          break;
        default:
          break;
      }
      y[bi * n + i] = s;
    }
  }
}

void BlockMatrix::apply_abs(const Vec& x, Vec& y) const {
  const int n = n_;
  y = Vec::Zero(3 * n);
  const auto& rp = pattern_->row_ptr;
  const auto& col = pattern_->col;
  for (int bi = 0; bi < 3; ++bi) {
    for (int bj = 0; bj < 3; ++bj) {
      if (!has(bi, bj)) continue;
      const auto& vb = values_[static_cast<std::size_t>(bi * 3 + bj)];
      for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int k = rp[static_cast<std::size_t>(i)]; k < rp[static_cast<std::size_t>(i) + 1]; ++k) {
          s += std::abs(vb[static_cast<std::size_t>(k)] * x[bj * n + col[static_cast<std::size_t>(k)]]);
        }
        y[bi * n + i] += s;
      }
    }
  }
}

Vec BlockMatrix::diagonal() const {
  Vec d = Vec::Zero(3 * n_);
  for (int b = 0; b < 3; ++b) {
    if (!has(b, b)) continue;
    const auto& vb = block(b, b);
    for (int i = 0; i < n_; ++i) d[b * n_ + i] = vb[static_cast<std::size_t>(pattern_->diag[static_cast<std::size_t>(i)])];
  }
  return d;
}

void BlockMatrix::constrain(int field, const std::vector<char>& mask) {
  const auto& rp = pattern_->row_ptr;
  const auto& col = pattern_->col;
  for (int bj = 0; bj < 3; ++bj) {
    if (!has(field, bj)) continue;
    auto& vb = block(field, bj);
    for (int i = 0; i < n_; ++i) {
      if (!mask[static_cast<std::size_t>(i)]) continue;
      for (int k = rp[static_cast<std::size_t>(i)]; k < rp[static_cast<std::size_t>(i) + 1]; ++k) vb[static_cast<std::size_t>(k)] = 0.0;
    }
  }
  for (int bi = 0; bi < 3; ++bi) {
    if (!has(bi, field)) continue;
    auto& vb = block(bi, field);
    for (std::size_t k = 0; k < col.size(); ++k) {
      if (mask[static_cast<std::size_t>(col[k])]) vb[k] = 0.0;
    }
  }
  auto& d = block(field, field);
  for (int i = 0; i < n_; ++i) {
    if (mask[static_cast<std::size_t>(i)]) d[static_cast<std::size_t>(pattern_->diag[static_cast<std::size_t>(i)])] = 1.0;
  }
}

Eigen::MatrixXd BlockMatrix::to_dense() const {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3 * n_, 3 * n_);
  for (int bi = 0; bi < 3; ++bi) {
    for (int bj = 0; bj < 3; ++bj) {
      if (!has(bi, bj)) continue;
      const auto& vb = block(bi, bj);
      for (int i = 0; i < n_; ++i) {
        for (int k = pattern_->row_ptr[static_cast<std::size_t>(i)]; k < pattern_->row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
          A(bi * n_ + i, bj * n_ + pattern_->col[static_cast<std::size_t>(k)]) = vb[static_cast<std::size_t>(k)];
        }
      }
    }
  }
  return A;
}

void combine(std::vector<double>& vals, double a, const std::vector<double>* x, double b,
             const std::vector<double>* y) {
  const std::size_t n = vals.size();
  for (std::size_t k = 0; k < n; ++k) {
    double s = 0.0;
    if (x) s += a * (*x)[k];
    if (y) s += b * (*y)[k];
    vals[k] = s;
  }
}

void axpy(std::vector<double>& vals, double a, const std::vector<double>& x) {
  const std::size_t n = vals.size();
  for (std::size_t k = 0; k < n; ++k) vals[k] += a * x[k];
}

}  // namespace pcaopt
