#include "pcaopt/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pcaopt {

namespace {

constexpr int Q = SplineSpace::kQuad;

// Per-element tensor tables: N[q][a] in each direction.
struct ElementTables {
  double Nx[Q][3];
  double Ny[Q][3];
  double w[Q][Q];  // w[qy][qx]
};

void element_tables(const SplineSpace& space, int ex, int ey, ElementTables& t) {
  for (int q = 0; q < Q; ++q) {
    const Basis1D& bx = space.basis_at_qp(ex, q);
    const Basis1D& by = space.basis_at_qp(ey, q);
    for (int a = 0; a < 3; ++a) {
      t.Nx[q][a] = bx.N[static_cast<std::size_t>(a)];
      t.Ny[q][a] = by.N[static_cast<std::size_t>(a)];
    }
  }
  for (int qy = 0; qy < Q; ++qy) {
    for (int qx = 0; qx < Q; ++qx) t.w[qy][qx] = space.qp_weight(qx, qy);
  }
}

// Values at the 3x3 points from local coefficients c[ay*3+ax].
void interpolate(const ElementTables& t, const double* c, double out[Q][Q]) {
  double tmp[3][Q];
  for (int ay = 0; ay < 3; ++ay) {
    for (int qx = 0; qx < Q; ++qx) {
      tmp[ay][qx] = c[ay * 3] * t.Nx[qx][0] + c[ay * 3 + 1] * t.Nx[qx][1] + c[ay * 3 + 2] * t.Nx[qx][2];
    }
  }
  for (int qy = 0; qy < Q; ++qy) {
    for (int qx = 0; qx < Q; ++qx) {
      out[qy][qx] = t.Ny[qy][0] * tmp[0][qx] + t.Ny[qy][1] * tmp[1][qx] + t.Ny[qy][2] * tmp[2][qx];
    }
  }
}

// local[a] = sum_q f[q] N_a(q) where f already carries the quadrature weight.
void project_local(const ElementTables& t, const double f[Q][Q], double local[9]) {
  double tmp[Q][3];
  for (int qy = 0; qy < Q; ++qy) {
    for (int ax = 0; ax < 3; ++ax) tmp[qy][ax] = f[qy][0] * t.Nx[0][ax] + f[qy][1] * t.Nx[1][ax] + f[qy][2] * t.Nx[2][ax];
  }
  for (int ay = 0; ay < 3; ++ay) {
    for (int ax = 0; ax < 3; ++ax) {
      local[ay * 3 + ax] = t.Ny[0][ay] * tmp[0][ax] + t.Ny[1][ay] * tmp[1][ax] + t.Ny[2][ay] * tmp[2][ax];
    }
  }
}

// local[a*9+b] = sum_q c[q] N_a(q) N_b(q), by sum factorization.
void weighted_mass_local(const ElementTables& t, const double c[Q][Q], double local[81]) {
  double T[Q][3][3];
  for (int qy = 0; qy < Q; ++qy) {
    for (int ax = 0; ax < 3; ++ax) {
      for (int bx = ax; bx < 3; ++bx) {
        double s = 0.0;
        for (int qx = 0; qx < Q; ++qx) s += c[qy][qx] * t.Nx[qx][ax] * t.Nx[qx][bx];
        T[qy][ax][bx] = s;
        T[qy][bx][ax] = s;
      }
    }
  }
  for (int ay = 0; ay < 3; ++ay) {
    for (int by = 0; by < 3; ++by) {
      const double p0 = t.Ny[0][ay] * t.Ny[0][by];
      const double p1 = t.Ny[1][ay] * t.Ny[1][by];
      const double p2 = t.Ny[2][ay] * t.Ny[2][by];
      for (int ax = 0; ax < 3; ++ax) {
        for (int bx = 0; bx < 3; ++bx) {
          local[(ay * 3 + ax) * 9 + by * 3 + bx] = p0 * T[0][ax][bx] + p1 * T[1][ax][bx] + p2 * T[2][ax][bx];
        }
      }
    }
  }
}

template <class F>
void for_each_element(const SplineSpace& space, AssemblyMode mode, F&& body) {
  // both modes visit elements in color order, so each dof sees the same
  // accumulation sequence
  const bool par = mode == AssemblyMode::Colored;
  for (const auto& color : space.colors()) {
    const int ne = static_cast<int>(color.size());
#pragma omp parallel for schedule(static) if (par)
    for (int i = 0; i < ne; ++i) body(color[static_cast<std::size_t>(i)]);
  }
}

void gather(const std::array<int, 9>& dofs, const Vec& c, double* out) {
  for (int a = 0; a < 9; ++a) out[a] = c[dofs[static_cast<std::size_t>(a)]];
}

// y = a*A x + b*B u in one pass over the pattern.
void csr_apply2(const Pattern& p, const std::vector<double>& A, const Vec& x, double a,
                const std::vector<double>& B, const Vec& u, double b, Vec& y) {
  const int n = p.rows();
  y.resize(n);
  const int* rp = p.row_ptr.data();
  const int* col = p.col.data();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    double s1 = 0.0;
    double s2 = 0.0;
    for (int k = rp[i]; k < rp[i + 1]; ++k) {
      s1 += A[static_cast<std::size_t>(k)] * x[col[k]];
      s2 += B[static_cast<std::size_t>(k)] * u[col[k]];
    }
    y[i] = a * s1 + b * s2;
  }
}

void resize_weights(const SplineSpace& space, WeightedMasses& W) {
  const std::size_t nnz = space.pattern().nnz();
  for (auto* v : {&W.phiphi, &W.phisig, &W.sigphi, &W.sigsig}) v->assign(nnz, 0.0);
}

}  // namespace

void assemble_reaction(const SplineSpace& space, const ModelParams& params, const Vec& phi,
                       const Vec& sigma, double U, double S, Vec* load_phi, Vec* load_sig,
                       WeightedMasses* W, AssemblyMode mode) {
  const int nb = space.num_basis();
  if (load_phi) *load_phi = Vec::Zero(nb);
  if (load_sig) *load_sig = Vec::Zero(nb);
  if (W) resize_weights(space, *W);
  const int nel = space.elements_per_side();
  const double M = params.M;
  const double gch = params.gamma_ch();
  const double gh = params.gamma_h;
  const double Sh = params.S_h;
  const double Sc = params.S_c;
  const double Sch = params.S_ch();

  for_each_element(space, mode, [&](int e) {
    ElementTables t;
    element_tables(space, e % nel, e / nel, t);
    const auto dofs = space.element_dofs(e);
    double cp[9], cs[9];
    gather(dofs, phi, cp);
    gather(dofs, sigma, cs);
    double vp[Q][Q], vs[Q][Q];
    interpolate(t, cp, vp);
    interpolate(t, cs, vs);

    double fp[Q][Q], fs[Q][Q];
    double wpp[Q][Q], wps[Q][Q], wsp[Q][Q], wss[Q][Q];
    for (int qy = 0; qy < Q; ++qy) {
      for (int qx = 0; qx < Q; ++qx) {
        const double ph = vp[qy][qx];
        const double sg = vs[qy][qx];
        const double w = t.w[qy][qx];
        const Derivs F = eval_F_derivs(ph, M);
        const Derivs h = eval_h_derivs(ph, M);
        const double m = eval_m(sg, params);
        fp[qy][qx] = w * (F.d1 + h.d1 * (U - m));
        fs[qy][qx] = w * (gh * sg + gch * sg * ph - Sh * (1.0 - ph) - (Sc - S) * ph);
        if (W) {
          wpp[qy][qx] = w * (F.d2 + h.d2 * (U - m));
          wps[qy][qx] = -w * h.d1 * eval_m_prime(sg, params);
          wsp[qy][qx] = w * (gch * sg + S - Sch);
          wss[qy][qx] = w * (gh + gch * ph);
        }
      }
    }
    if (load_phi) {
      double l[9];
      project_local(t, fp, l);
      for (int a = 0; a < 9; ++a) (*load_phi)[dofs[static_cast<std::size_t>(a)]] += l[a];
    }
    if (load_sig) {
      double l[9];
      project_local(t, fs, l);
      for (int a = 0; a < 9; ++a) (*load_sig)[dofs[static_cast<std::size_t>(a)]] += l[a];
    }
    if (W) {
      const int* pos = space.element_positions(e);
      double loc[81];
      weighted_mass_local(t, wpp, loc);
      for (int k = 0; k < 81; ++k) W->phiphi[static_cast<std::size_t>(pos[k])] += loc[k];
      weighted_mass_local(t, wps, loc);
      for (int k = 0; k < 81; ++k) W->phisig[static_cast<std::size_t>(pos[k])] += loc[k];
      weighted_mass_local(t, wsp, loc);
      for (int k = 0; k < 81; ++k) W->sigphi[static_cast<std::size_t>(pos[k])] += loc[k];
      weighted_mass_local(t, wss, loc);
      for (int k = 0; k < 81; ++k) W->sigsig[static_cast<std::size_t>(pos[k])] += loc[k];
    }
  });
}

void assemble_weights(const SplineSpace& space, const ModelParams& params, const Vec& phi,
                      const Vec& sigma, double U, double S, WeightedMasses& W, AssemblyMode mode) {
  assemble_reaction(space, params, phi, sigma, U, S, nullptr, nullptr, &W, mode);
}

Vec assemble_hprime_load(const SplineSpace& space, const Vec& phi, double M, AssemblyMode mode) {
  Vec load = Vec::Zero(space.num_basis());
  const int nel = space.elements_per_side();
  for_each_element(space, mode, [&](int e) {
    ElementTables t;
    element_tables(space, e % nel, e / nel, t);
    const auto dofs = space.element_dofs(e);
    double cp[9];
    gather(dofs, phi, cp);
    double vp[Q][Q], f[Q][Q];
    interpolate(t, cp, vp);
    for (int qy = 0; qy < Q; ++qy) {
      for (int qx = 0; qx < Q; ++qx) f[qy][qx] = t.w[qy][qx] * eval_h_derivs(vp[qy][qx], M).d1;
    }
    double l[9];
    project_local(t, f, l);
    for (int a = 0; a < 9; ++a) load[dofs[static_cast<std::size_t>(a)]] += l[a];
  });
  return load;
}

double integrate_hprime_times(const SplineSpace& space, const Vec& phi, const Vec& w, double M) {
  const Vec load = assemble_hprime_load(space, phi, M, AssemblyMode::Serial);
  return load.dot(w);
}

void forward_residual(const SplineSpace& space, const ModelParams& params, const Vec& Y,
                      const Vec& Ydot, double U, double S, Vec& R, AssemblyMode mode) {
  const int n = space.num_basis();
  if (Y.size() != 3 * n || Ydot.size() != 3 * n) throw std::invalid_argument("forward_residual: size mismatch");
  const Vec phi = Y.segment(0, n);
  const Vec sig = Y.segment(n, n);
  const Vec p = Y.segment(2 * n, n);
  Vec lp, ls;
  assemble_reaction(space, params, phi, sig, U, S, &lp, &ls, nullptr, mode);

  const auto& P = space.pattern();
  const auto& Mv = space.mass();
  const auto& Kv = space.stiffness();
  R.resize(3 * n);
  Vec tmp;
  csr_apply2(P, Mv, Ydot.segment(0, n), 1.0, Kv, phi, params.lambda, tmp);
  R.segment(0, n) = tmp + lp;
  csr_apply2(P, Mv, Ydot.segment(n, n), 1.0, Kv, sig, params.eta, tmp);
  R.segment(n, n) = tmp + ls;
  const Vec mp = Ydot.segment(2 * n, n) + params.gamma_p * p - params.alpha_ch() * phi;
  csr_apply2(P, Mv, mp, 1.0, Kv, p, params.D, tmp);
  R.segment(2 * n, n) = tmp - params.alpha_h * space.basis_integrals();
}

namespace {

void fill_operator(const SplineSpace& space, const ModelParams& params, const Vec& Y, double U,
                   double S, BlockMatrix& J, AssemblyMode mode, bool transposed) {
  const int n = space.num_basis();
  if (Y.size() != 3 * n) throw std::invalid_argument("operator assembly: size mismatch");
  if (J.block_rows() != n) J = BlockMatrix(space.pattern());
  WeightedMasses W;
  assemble_weights(space, params, Y.segment(0, n), Y.segment(n, n), U, S, W, mode);
  const auto& Mv = space.mass();
  const auto& Kv = space.stiffness();

  auto& pp = J.block(0, 0);
  for (std::size_t k = 0; k < pp.size(); ++k) pp[k] = params.lambda * Kv[k] + W.phiphi[k];
  auto& ss = J.block(1, 1);
  for (std::size_t k = 0; k < ss.size(); ++k) ss[k] = params.eta * Kv[k] + W.sigsig[k];
  auto& qq = J.block(2, 2);
  for (std::size_t k = 0; k < qq.size(); ++k) qq[k] = params.D * Kv[k] + params.gamma_p * Mv[k];
  // weighted masses are symmetric, so transposition only swaps block slots
  J.block(0, 1) = transposed ? W.sigphi : W.phisig;
  J.block(1, 0) = transposed ? W.phisig : W.sigphi;
  auto& coupling = transposed ? J.block(0, 2) : J.block(2, 0);
  for (std::size_t k = 0; k < coupling.size(); ++k) coupling[k] = -params.alpha_ch() * Mv[k];
}

}  // namespace

void forward_jacobian(const SplineSpace& space, const ModelParams& params, const Vec& Y, double U,
                      double S, BlockMatrix& J, AssemblyMode mode) {
  fill_operator(space, params, Y, U, S, J, mode, false);
}

void adjoint_operator(const SplineSpace& space, const ModelParams& params, const Vec& Y, double U,
                      double S, BlockMatrix& G, AssemblyMode mode) {
  fill_operator(space, params, Y, U, S, G, mode, true);
}

BlockMatrix transpose(const SplineSpace& space, const BlockMatrix& A) {
  const auto& P = space.pattern();
  BlockMatrix T(P);
  const int n = P.rows();
  for (int bi = 0; bi < 3; ++bi) {
    for (int bj = 0; bj < 3; ++bj) {
      if (!A.has(bi, bj)) continue;
      const auto& src = A.block(bi, bj);
      auto& dst = T.block(bj, bi);
      for (int i = 0; i < n; ++i) {
        for (int k = P.row_ptr[static_cast<std::size_t>(i)]; k < P.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
          const int j = P.col[static_cast<std::size_t>(k)];
          const auto first = P.col.begin() + P.row_ptr[static_cast<std::size_t>(j)];
          const auto last = P.col.begin() + P.row_ptr[static_cast<std::size_t>(j) + 1];
          const auto it = std::lower_bound(first, last, i);
          dst[static_cast<std::size_t>(it - P.col.begin())] = src[static_cast<std::size_t>(k)];
        }
      }
    }
  }
  return T;
}

}  // namespace pcaopt
