// Tensor-product C1 quadratic B-spline space on the square [0, L]^2.
#pragma once

#include <Eigen/Core>

#include <array>
#include <functional>
#include <stdexcept>
#include <vector>

namespace pcaopt {

using Vec = Eigen::VectorXd;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Values and first derivatives of the three quadratic basis functions that
/// are non-zero on one knot span. `first` is the global 1D index of the
/// leftmost one.
struct Basis1D {
  int first = 0;
  std::array<double, 3> N{};
  std::array<double, 3> dN{};
};

/// CSR sparsity pattern shared by every matrix block on the space.
struct Pattern {
  std::vector<int> row_ptr;
  std::vector<int> col;
  std::vector<int> diag;  // position of (A, A) in each row
  [[nodiscard]] int rows() const { return static_cast<int>(row_ptr.size()) - 1; }
  [[nodiscard]] std::size_t nnz() const { return col.size(); }
};

class SplineSpace {
 public:
  static constexpr int kDegree = 2;
  static constexpr int kQuad = 3;           // Gauss points per direction
  static constexpr int kLocal = 9;          // basis functions per element
  static constexpr int kQp = kQuad * kQuad;  // quadrature points per element

  /// Open-knot quadratic space with `elements_per_side`^2 uniform elements.
  /// Throws ConfigError for fewer than 4 elements per side.
  static SplineSpace build(int elements_per_side, double side_length);

  [[nodiscard]] int elements_per_side() const { return n_el_; }
  [[nodiscard]] int basis_per_side() const { return n1_; }
  [[nodiscard]] int num_basis() const { return n1_ * n1_; }
  [[nodiscard]] int num_elements() const { return n_el_ * n_el_; }
  [[nodiscard]] double side_length() const { return L_; }
  [[nodiscard]] double element_size() const { return h_; }
  [[nodiscard]] double domain_measure() const { return L_ * L_; }
  [[nodiscard]] const std::vector<double>& knots() const { return knots_; }

  /// 1D basis at global quadrature point q of element e (per direction).
  [[nodiscard]] const Basis1D& basis_at_qp(int e, int q) const { return qp_basis_[e * kQuad + q]; }
  [[nodiscard]] double qp_coord(int e, int q) const { return qp_x_[e * kQuad + q]; }
  /// Tensor weight (Gauss weight times Jacobian) of point (qx, qy).
  [[nodiscard]] double qp_weight(int qx, int qy) const { return qp_w_[qx] * qp_w_[qy]; }

  /// 1D basis evaluated at arbitrary x in [0, L].
  [[nodiscard]] Basis1D eval_1d(double x) const;
  /// Value of the spline with coefficients `c` at (x, y).
  [[nodiscard]] double evaluate(const Vec& c, double x, double y) const;

  /// True for basis functions with non-zero trace on the boundary.
  [[nodiscard]] const std::vector<char>& boundary_mask() const { return boundary_; }
  [[nodiscard]] const std::vector<int>& boundary_dofs() const { return boundary_dofs_; }

  [[nodiscard]] const Pattern& pattern() const { return pattern_; }
  /// CSR positions of the 9x9 local pairs of element e, row-major (a, b).
  [[nodiscard]] const int* element_positions(int e) const { return &elem_pos_[static_cast<std::size_t>(e) * 81]; }
  /// Global indices of the 9 local basis functions of element e.
  [[nodiscard]] std::array<int, kLocal> element_dofs(int e) const;
  /// Elements grouped so that no two in a group share a basis function.
  [[nodiscard]] const std::vector<std::vector<int>>& colors() const { return colors_; }

  /// Mass and stiffness matrices on the shared pattern; ∫N_A per basis.
  [[nodiscard]] const std::vector<double>& mass() const { return mass_; }
  [[nodiscard]] const std::vector<double>& stiffness() const { return stiffness_; }
  [[nodiscard]] const Vec& basis_integrals() const { return basis_int_; }

 private:
  SplineSpace() = default;
  void build_tables();
  void build_pattern();
  void build_operators();

  int n_el_ = 0;
  int n1_ = 0;
  double L_ = 0.0;
  double h_ = 0.0;
  std::vector<double> knots_;
  std::vector<Basis1D> qp_basis_;
  std::vector<double> qp_x_;
  std::array<double, kQuad> qp_w_{};
  std::vector<char> boundary_;
  std::vector<int> boundary_dofs_;
  Pattern pattern_;
  std::vector<int> elem_pos_;
  std::vector<std::vector<int>> colors_;
  std::vector<double> mass_;
  std::vector<double> stiffness_;
  Vec basis_int_;
};

/// y = A x for a matrix stored on the space pattern.
void csr_apply(const Pattern& p, const std::vector<double>& values, const Vec& x, Vec& y);

/// ∫ u dx for the spline with coefficients c.
[[nodiscard]] double integrate_field(const SplineSpace& space, const Vec& c);
/// ∫ u v dx for two splines.
[[nodiscard]] double integrate_product(const SplineSpace& space, const Vec& a, const Vec& b);

/// L2 projection of f onto the spline space. With `homogeneous_dirichlet`
/// the projection is onto the subspace vanishing on the boundary.
[[nodiscard]] Vec l2_project(const SplineSpace& space, const std::function<double(double, double)>& f,
                             bool homogeneous_dirichlet = false, double tol = 1e-13);
/// Solves M c = load (optionally with boundary coefficients fixed at 0).
[[nodiscard]] Vec mass_solve(const SplineSpace& space, const Vec& load, bool homogeneous_dirichlet,
                             double tol = 1e-13);

/// Min and max of a spline over all quadrature points.
struct FieldRange {
  double min;
  double max;
};
[[nodiscard]] FieldRange quadrature_range(const SplineSpace& space, const Vec& c);

}  // namespace pcaopt
