#include "pcaopt/spline_space.hpp"

#include "pcaopt/gmres.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace pcaopt {

namespace {

double safe_div(double a, double b) { return b == 0.0 ? 0.0 : a / b; }

// Quadratic basis and first derivatives on knot span s (knots[s] <= x < knots[s+1]).
Basis1D eval_span(const std::vector<double>& u, int s, double x) {
  // degree-1 functions N_{s-1,1}, N_{s,1}; N_{s-2,1} = N_{s+1,1} = 0
  const double span = u[s + 1] - u[s];
  const double l_prev = safe_div(u[s + 1] - x, span);
  const double l_curr = safe_div(x - u[s], span);
  const double lin[4] = {0.0, l_prev, l_curr, 0.0};  // N_{s-2..s+1,1}

  Basis1D b;
  b.first = s - 2;
  for (int r = 0; r < 3; ++r) {
    const int i = s - 2 + r;
    const double d0 = u[i + 2] - u[i];
    const double d1 = u[i + 3] - u[i + 1];
    b.N[r] = safe_div(x - u[i], d0) * lin[r] + safe_div(u[i + 3] - x, d1) * lin[r + 1];
    b.dN[r] = 2.0 * (safe_div(lin[r], d0) - safe_div(lin[r + 1], d1));
  }
  return b;
}

constexpr std::array<double, 3> kGaussPts = {-0.7745966692414834, 0.0, 0.7745966692414834};
constexpr std::array<double, 3> kGaussWts = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

}  // namespace

SplineSpace SplineSpace::build(int elements_per_side, double side_length) {
  if (elements_per_side < 4) {
    throw ConfigError("spline space needs at least 4 elements per side (got " +
                      std::to_string(elements_per_side) + ")");
  }
  if (!(side_length > 0.0)) throw ConfigError("domain side length must be positive");
  SplineSpace s;
  s.n_el_ = elements_per_side;
  s.n1_ = elements_per_side + kDegree;
  s.L_ = side_length;
  s.h_ = side_length / elements_per_side;
  s.knots_.assign(static_cast<std::size_t>(s.n_el_ + 5), 0.0);
  for (int i = 0; i <= s.n_el_; ++i) s.knots_[static_cast<std::size_t>(i + 2)] = s.h_ * i;
  s.knots_[static_cast<std::size_t>(s.n_el_ + 2)] = side_length;
  s.knots_[static_cast<std::size_t>(s.n_el_ + 3)] = side_length;
  s.knots_[static_cast<std::size_t>(s.n_el_ + 4)] = side_length;
  s.build_tables();
  s.build_pattern();
  s.build_operators();
  return s;
}

void SplineSpace::build_tables() {
  qp_basis_.resize(static_cast<std::size_t>(n_el_ * kQuad));
  qp_x_.resize(static_cast<std::size_t>(n_el_ * kQuad));
  for (int q = 0; q < kQuad; ++q) qp_w_[q] = kGaussWts[q] * 0.5 * h_;
  for (int e = 0; e < n_el_; ++e) {
    const double x0 = knots_[static_cast<std::size_t>(e + 2)];
    for (int q = 0; q < kQuad; ++q) {
      const double x = x0 + 0.5 * h_ * (1.0 + kGaussPts[q]);
      qp_x_[static_cast<std::size_t>(e * kQuad + q)] = x;
      qp_basis_[static_cast<std::size_t>(e * kQuad + q)] = eval_span(knots_, e + 2, x);
    }
  }

  boundary_.assign(static_cast<std::size_t>(num_basis()), 0);
  boundary_dofs_.clear();
  for (int j = 0; j < n1_; ++j) {
    for (int i = 0; i < n1_; ++i) {
      if (i == 0 || j == 0 || i == n1_ - 1 || j == n1_ - 1) {
        boundary_[static_cast<std::size_t>(j * n1_ + i)] = 1;
        boundary_dofs_.push_back(j * n1_ + i);
      }
    }
  }

  colors_.assign(9, {});
  for (int ey = 0; ey < n_el_; ++ey) {
    for (int ex = 0; ex < n_el_; ++ex) colors_[static_cast<std::size_t>((ex % 3) + 3 * (ey % 3))].push_back(ey * n_el_ + ex);
  }
}

Basis1D SplineSpace::eval_1d(double x) const {
  x = std::clamp(x, 0.0, L_);
  int e = static_cast<int>(std::floor(x / h_));
  e = std::clamp(e, 0, n_el_ - 1);
  return eval_span(knots_, e + 2, x);
}

double SplineSpace::evaluate(const Vec& c, double x, double y) const {
  const Basis1D bx = eval_1d(x);
  const Basis1D by = eval_1d(y);
  double v = 0.0;
  for (int b = 0; b < 3; ++b) {
    for (int a = 0; a < 3; ++a) v += c[(by.first + b) * n1_ + bx.first + a] * bx.N[a] * by.N[b];
  }
  return v;
}

std::array<int, SplineSpace::kLocal> SplineSpace::element_dofs(int e) const {
  const int ex = e % n_el_;
  const int ey = e / n_el_;
  std::array<int, kLocal> d{};
  for (int b = 0; b < 3; ++b) {
    for (int a = 0; a < 3; ++a) d[static_cast<std::size_t>(b * 3 + a)] = (ey + b) * n1_ + ex + a;
  }
  return d;
}

void SplineSpace::build_pattern() {
  const int n = num_basis();
  pattern_.row_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
  pattern_.col.clear();
  pattern_.diag.assign(static_cast<std::size_t>(n), -1);
  for (int j = 0; j < n1_; ++j) {
    for (int i = 0; i < n1_; ++i) {
      const int row = j * n1_ + i;
      for (int l = std::max(0, j - 2); l <= std::min(n1_ - 1, j + 2); ++l) {
        for (int k = std::max(0, i - 2); k <= std::min(n1_ - 1, i + 2); ++k) {
          if (l * n1_ + k == row) pattern_.diag[static_cast<std::size_t>(row)] = static_cast<int>(pattern_.col.size());
          pattern_.col.push_back(l * n1_ + k);
        }
      }
      pattern_.row_ptr[static_cast<std::size_t>(row) + 1] = static_cast<int>(pattern_.col.size());
    }
  }

  elem_pos_.resize(static_cast<std::size_t>(num_elements()) * 81);
  for (int e = 0; e < num_elements(); ++e) {
    const auto dofs = element_dofs(e);
    for (int a = 0; a < kLocal; ++a) {
      const int row = dofs[static_cast<std::size_t>(a)];
      const int i = row % n1_;
      const int j = row / n1_;
      const int k0 = std::max(0, i - 2);
      const int l0 = std::max(0, j - 2);
      const int width = std::min(n1_ - 1, i + 2) - k0 + 1;
      for (int b = 0; b < kLocal; ++b) {
        const int colg = dofs[static_cast<std::size_t>(b)];
        const int k = colg % n1_;
        const int l = colg / n1_;
        elem_pos_[static_cast<std::size_t>(e) * 81 + static_cast<std::size_t>(a * kLocal + b)] =
            pattern_.row_ptr[static_cast<std::size_t>(row)] + (l - l0) * width + (k - k0);
      }
    }
  }
}

void SplineSpace::build_operators() {
  mass_.assign(pattern_.nnz(), 0.0);
  stiffness_.assign(pattern_.nnz(), 0.0);
  basis_int_ = Vec::Zero(num_basis());
  for (int e = 0; e < num_elements(); ++e) {
    const int ex = e % n_el_;
    const int ey = e / n_el_;
    const auto dofs = element_dofs(e);
    const int* pos = element_positions(e);
    for (int qy = 0; qy < kQuad; ++qy) {
      const Basis1D& by = basis_at_qp(ey, qy);
      for (int qx = 0; qx < kQuad; ++qx) {
        const Basis1D& bx = basis_at_qp(ex, qx);
        const double w = qp_weight(qx, qy);
        double N[kLocal], Nx[kLocal], Ny[kLocal];
        for (int b = 0; b < 3; ++b) {
          for (int a = 0; a < 3; ++a) {
            N[b * 3 + a] = bx.N[a] * by.N[b];
            Nx[b * 3 + a] = bx.dN[a] * by.N[b];
            Ny[b * 3 + a] = bx.N[a] * by.dN[b];
          }
        }
        for (int a = 0; a < kLocal; ++a) {
          basis_int_[dofs[static_cast<std::size_t>(a)]] += w * N[a];
          for (int b = 0; b < kLocal; ++b) {
            mass_[static_cast<std::size_t>(pos[a * kLocal + b])] += w * N[a] * N[b];
            stiffness_[static_cast<std::size_t>(pos[a * kLocal + b])] += w * (Nx[a] * Nx[b] + Ny[a] * Ny[b]);
          }
        }
      }
    }
  }
}

void csr_apply(const Pattern& p, const std::vector<double>& values, const Vec& x, Vec& y) {
  const int n = p.rows();
  y.resize(n);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int k = p.row_ptr[static_cast<std::size_t>(i)]; k < p.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
      s += values[static_cast<std::size_t>(k)] * x[p.col[static_cast<std::size_t>(k)]];
    }
    y[i] = s;
  }
}

double integrate_field(const SplineSpace& space, const Vec& c) { return space.basis_integrals().dot(c); }

double integrate_product(const SplineSpace& space, const Vec& a, const Vec& b) {
  Vec Mb;
  csr_apply(space.pattern(), space.mass(), b, Mb);
  return a.dot(Mb);
}

Vec mass_solve(const SplineSpace& space, const Vec& load, bool homogeneous_dirichlet, double tol) {
  const auto& mask = space.boundary_mask();
  Vec rhs = load;
  if (homogeneous_dirichlet) {
    for (int d : space.boundary_dofs()) rhs[d] = 0.0;
  }
  Vec diag(space.num_basis());
  for (int i = 0; i < space.num_basis(); ++i) {
    diag[i] = space.mass()[static_cast<std::size_t>(space.pattern().diag[static_cast<std::size_t>(i)])];
  }
  Vec masked;
  auto apply = [&](const Vec& x, Vec& y) {
    if (!homogeneous_dirichlet) {
      csr_apply(space.pattern(), space.mass(), x, y);
      return;
    }
    masked = x;
    for (int d : space.boundary_dofs()) masked[d] = 0.0;
    csr_apply(space.pattern(), space.mass(), masked, y);
    for (int i = 0; i < space.num_basis(); ++i) {
      if (mask[static_cast<std::size_t>(i)]) y[i] = x[i];
    }
  };
  const GmresResult r = gmres_solve(apply, rhs, diag, tol, 2000);
  if (!r.ok()) {
    throw std::runtime_error("mass-matrix solve failed: " + to_string(r.status) +
                             " (relative residual " + std::to_string(r.rel_residual) + ")");
  }
  return r.x;
}

Vec l2_project(const SplineSpace& space, const std::function<double(double, double)>& f,
               bool homogeneous_dirichlet, double tol) {
  Vec load = Vec::Zero(space.num_basis());
  const int ne = space.elements_per_side();
  for (int e = 0; e < space.num_elements(); ++e) {
    const int ex = e % ne;
    const int ey = e / ne;
    const auto dofs = space.element_dofs(e);
    for (int qy = 0; qy < SplineSpace::kQuad; ++qy) {
      const Basis1D& by = space.basis_at_qp(ey, qy);
      const double y = space.qp_coord(ey, qy);
      for (int qx = 0; qx < SplineSpace::kQuad; ++qx) {
        const Basis1D& bx = space.basis_at_qp(ex, qx);
        const double fw = f(space.qp_coord(ex, qx), y) * space.qp_weight(qx, qy);
        for (int b = 0; b < 3; ++b) {
          for (int a = 0; a < 3; ++a) load[dofs[static_cast<std::size_t>(b * 3 + a)]] += fw * bx.N[a] * by.N[b];
        }
      }
    }
  }
  return mass_solve(space, load, homogeneous_dirichlet, tol);
}

FieldRange quadrature_range(const SplineSpace& space, const Vec& c) {
  FieldRange r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  const int ne = space.elements_per_side();
  for (int e = 0; e < space.num_elements(); ++e) {
    const int ex = e % ne;
    const int ey = e / ne;
    const auto dofs = space.element_dofs(e);
    for (int qy = 0; qy < SplineSpace::kQuad; ++qy) {
      const Basis1D& by = space.basis_at_qp(ey, qy);
      for (int qx = 0; qx < SplineSpace::kQuad; ++qx) {
        const Basis1D& bx = space.basis_at_qp(ex, qx);
        double v = 0.0;
        for (int b = 0; b < 3; ++b) {
          for (int a = 0; a < 3; ++a) v += c[dofs[static_cast<std::size_t>(b * 3 + a)]] * bx.N[a] * by.N[b];
        }
        r.min = std::min(r.min, v);
        r.max = std::max(r.max, v);
      }
    }
  }
  return r;
}

}  // namespace pcaopt
