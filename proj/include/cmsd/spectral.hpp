#pragma once

// Linearization at 0: the discretized generator, its characteristic roots, the
// splitting C¹ = C_u ⊕ C_c ⊕ Y_s ⊕ Z with the associated projections, and the
// chart (K, R) of the solution manifold.
//
// Z is spanned by n realified eigen-directions of the discretized generator
// that belong to non-retained (collocation) eigenvalues, so that it is
// invariant under the linear flow. Y = T_0 X_f is the kernel of the
// linearized constraint restricted to the stable spectral part.

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cmsd/error.hpp"
#include "cmsd/model.hpp"
#include "cmsd/segment.hpp"
#include "cmsd/semiflow.hpp"

namespace cmsd {

using cplx = std::complex<double>;
using GridPtr = std::shared_ptr<const Grid>;

/// Pseudospectral generator: D ⊗ I with the node-0 rows replaced by D_e f(0).
inline Eigen::MatrixXd discretized_generator(const DelayModel& m, const Grid& grid) {
  Eigen::MatrixXd A = grid.full_differentiation();
  A.topRows(grid.n) = m.d_e_f_zero_matrix(grid);
  return A;
}

/// det(λI - Dg(0) e^{-λ r(0)}).
inline cplx characteristic_residual(const DelayModel& m, cplx lambda) {
  const Eigen::MatrixXcd J = m.dg(Eigen::VectorXd::Zero(m.n())).cast<cplx>();
  const Eigen::MatrixXcd M = lambda * Eigen::MatrixXcd::Identity(m.n(), m.n()) - J * std::exp(-lambda * m.r0());
  return M.determinant();
}

/// |χ(λ)| / max(1, |λ|)^n, the scale-free residual used for filtering.
inline double normalized_residual(const DelayModel& m, cplx lambda) {
  return std::abs(characteristic_residual(m, lambda)) / std::pow(std::max(1.0, std::abs(lambda)), m.n());
}

/// The eigenfunction θ ↦ e^{λθ}v of the linearization at a characteristic root λ,
/// v spanning the (numerical) kernel of λI - Dg(0)e^{-λ r(0)}; complex nodal vector.
inline Eigen::VectorXcd eigenfunction(const DelayModel& m, const Grid& grid, cplx lambda) {
  const int n = m.n();
  const Eigen::MatrixXcd J = m.dg(Eigen::VectorXd::Zero(n)).cast<cplx>();
  const Eigen::MatrixXcd M = lambda * Eigen::MatrixXcd::Identity(n, n) - J * std::exp(-lambda * m.r0());
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeFullV);
  const Eigen::VectorXcd v = svd.matrixV().col(n - 1);
  Eigen::VectorXcd x(grid.dim());
  for (int i = 0; i < grid.num_nodes(); ++i) x.segment(i * n, n) = std::exp(lambda * grid.nodes(i)) * v;
  return x;
}

/// Newton on χ with χ'/χ = tr(M⁻¹ M'); returns the start point if Newton wanders off.
inline cplx polish_root(const DelayModel& m, cplx lambda, int max_iter = 80) {
  const int n = m.n();
  const Eigen::MatrixXcd J = m.dg(Eigen::VectorXd::Zero(n)).cast<cplx>();
  const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(n, n);
  const cplx start = lambda;
  double best = normalized_residual(m, lambda);
  cplx best_lambda = lambda;
  for (int it = 0; it < max_iter; ++it) {
    const cplx e = std::exp(-lambda * m.r0());
    const Eigen::MatrixXcd M = lambda * I - J * e;
    const Eigen::MatrixXcd Mp = I + m.r0() * J * e;
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(M);
    if (!lu.isInvertible()) break;
    const cplx tr = lu.solve(Mp).trace();
    if (tr == 0.0) break;
    const cplx step = 1.0 / tr;
    lambda -= step;
    const double res = normalized_residual(m, lambda);
    if (res < best || (res == best && std::abs(lambda - start) < std::abs(best_lambda - start))) {
      best = res;
      best_lambda = lambda;
    }
    if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(lambda)) || res == 0.0) break;
  }
  if (std::abs(best_lambda - start) > 1e-4 * std::max(1.0, std::abs(start))) return start;
  return best_lambda;
}

enum class RootClass { unstable, center, stable };

inline const char* to_string(RootClass c) {
  switch (c) {
    case RootClass::unstable: return "unstable";
    case RootClass::center: return "center";
    case RootClass::stable: return "stable";
  }
  return "?";
}

struct Root {
  cplx raw;          // eigenvalue of the discretized generator
  cplx value;        // polished (or raw) value
  double residual;   // normalized characteristic residual at raw
  bool retained;     // passes the residual filter
  RootClass cls;
};

struct SpectralOptions {
  bool polish = true;
  double tol_center = 1e-8;
  double residual_tol = 1e-6;
  /// Relative distance below which eigenvalues are grouped into one cluster.
  double cluster_tol = 1e-4;
  bool require_center = true;
  int max_jordan = 3;
};

struct SpectralDecomposition {
  GridPtr grid;
  int n = 1;
  int d_c = 0, d_u = 0, d_s = 0;
  Eigen::MatrixXd A;
  /// Linearized X_f constraint: L x = (Dx)(0) - D_e f(0)x.
  Eigen::MatrixXd L;
  std::vector<Root> roots;
  /// Realified (generalized) eigenvectors; columns normalized to unit max-norm.
  Eigen::MatrixXd basis_c, basis_u;
  /// Orthonormal basis of Y_s = C_s ∩ Y.
  Eigen::MatrixXd basis_s;
  /// Columns spanning Z.
  Eigen::MatrixXd basis_z;
  /// Y-rows of T⁻¹AZ; Z lies in E_s but is not A-invariant.
  Eigen::MatrixXd coupling_z;
  /// Left (adjoint) basis of C_u ⊕ C_c, columns matched to [basis_c basis_u].
  Eigen::MatrixXd left_cu;
  /// T = [basis_c basis_u basis_s basis_z] and its inverse (coordinate map).
  Eigen::MatrixXd T, Tinv;
  Eigen::MatrixXd proj_c, proj_u, proj_Ys, proj_Z;
  Eigen::MatrixXd B_c, B_u, B_s;
  /// L·P_s, the constraint whose kernel is Y.
  Eigen::MatrixXd L_Y;
  /// L restricted to Z, n x n.
  Eigen::MatrixXd M_z;
  double transversality_cond = 0.0;
  double block_residual = 0.0;
  double commutation_residual = 0.0;
  double max_re_stable_block = 0.0;
  /// False when built for a model without center directions on purpose.
  bool require_center = true;

  int dim() const { return static_cast<int>(A.rows()); }
  int d_y() const { return d_c + d_u + d_s; }
  int off_c() const { return 0; }
  int off_u() const { return d_c; }
  int off_s() const { return d_c + d_u; }
  int off_z() const { return d_c + d_u + d_s; }

  std::vector<const Root*> retained(RootClass c) const {
    std::vector<const Root*> out;
    for (const auto& r : roots)
      if (r.retained && r.cls == c) out.push_back(&r);
    return out;
  }

  /// Coordinates a = T⁻¹x = (c, u, s, z).
  Eigen::VectorXd coordinates(const Eigen::VectorXd& x) const { return Tinv * x; }
};

namespace spectral_detail {

struct Cluster {
  cplx center;
  std::vector<int> members;  // indices into eigenvalue list
};

inline std::vector<Cluster> cluster(const std::vector<cplx>& ev, const std::vector<int>& idx, double tol) {
  std::vector<Cluster> out;
  for (int i : idx) {
    bool placed = false;
    for (auto& c : out) {
      if (std::abs(ev[i] - ev[c.members.front()]) <= tol * std::max(1.0, std::abs(ev[i]))) {
        c.members.push_back(i);
        placed = true;
        break;
      }
    }
    if (!placed) out.push_back({ev[i], {i}});
  }
  for (auto& c : out) {
    cplx s = 0.0;
    for (int i : c.members) s += ev[i];
    c.center = s / static_cast<double>(c.members.size());
  }
  return out;
}

/// The `dim` right singular vectors of M belonging to the smallest singular values.
inline Eigen::MatrixXcd smallest_singular_vectors(const Eigen::MatrixXcd& M, int dim) {
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeFullV);
  return svd.matrixV().rightCols(dim);
}

inline Eigen::MatrixXcd matrix_power(const Eigen::MatrixXcd& M, int p) {
  Eigen::MatrixXcd out = M;
  for (int i = 1; i < p; ++i) out = out * M;
  return out;
}

/// Unit max-norm, largest entry (first within a relative 1e-8 band) real positive.
inline Eigen::VectorXcd normalize_phase(const Eigen::VectorXcd& v) {
  const double mx = v.cwiseAbs().maxCoeff();
  int k = 0;
  for (int i = 0; i < v.size(); ++i)
    if (std::abs(v(i)) >= (1 - 1e-8) * mx) {
      k = i;
      break;
    }
  return v * (std::conj(v(k)) / (std::abs(v(k)) * std::abs(v(k))));
}

inline Eigen::VectorXd normalize_sign(const Eigen::VectorXd& v) {
  const double mx = v.cwiseAbs().maxCoeff();
  if (mx == 0.0) return v;
  int k = 0;
  for (int i = 0; i < v.size(); ++i)
    if (std::abs(v(i)) >= (1 - 1e-8) * mx) {
      k = i;
      break;
    }
  return v / v(k);
}

/// Real basis of the generalized eigenspace of M for a cluster (and its conjugate).
inline Eigen::MatrixXd realified_space(const Eigen::MatrixXd& M, const Cluster& cl, const Eigen::MatrixXcd& eigvecs,
                                       bool is_real, bool generalized) {
  const int s = static_cast<int>(cl.members.size());
  const int dim = static_cast<int>(M.rows());
  Eigen::MatrixXcd V;
  if (s == 1) {
    V = eigvecs.col(cl.members.front());
  } else {
    const cplx lam = is_real ? cplx(cl.center.real(), 0.0) : cl.center;
    const Eigen::MatrixXcd shifted = M.cast<cplx>() - lam * Eigen::MatrixXcd::Identity(dim, dim);
    V = smallest_singular_vectors(generalized ? matrix_power(shifted, s) : shifted, s);
  }
  if (is_real) {
    Eigen::MatrixXd R(dim, s);
    for (int j = 0; j < s; ++j) {
      Eigen::VectorXcd v = V.col(j);
      // rotate so that the real part carries the vector
      v = normalize_phase(v);
      R.col(j) = normalize_sign(v.real());
    }
    if (s > 1) {
      // orthogonalize the real parts, then renormalize
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(R);
      R = qr.householderQ() * Eigen::MatrixXd::Identity(dim, s);
      for (int j = 0; j < s; ++j) R.col(j) = normalize_sign(R.col(j));
    }
    return R;
  }
  Eigen::MatrixXd R(dim, 2 * s);
  for (int j = 0; j < s; ++j) {
    const Eigen::VectorXcd v = s == 1 ? normalize_phase(V.col(j)) : V.col(j);
    R.col(2 * j) = v.real();
    R.col(2 * j + 1) = v.imag();
  }
  return R;
}

inline double smallest_singular_value(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  return svd.singularValues().minCoeff();
}

inline double max_abs(const Eigen::MatrixXd& M) { return M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff(); }

}  // namespace spectral_detail

/// Classifies the spectrum of the discretized generator and assembles the splitting.
inline SpectralDecomposition decompose(const DelayModel& m, GridPtr grid, const SpectralOptions& opt = {}) {
  using namespace spectral_detail;
  if (!(opt.tol_center > 0.0) || !(opt.residual_tol > 0.0)) throw ConfigError("decompose: tolerances must be positive");
  if (grid->n != m.n() || grid->h != m.h()) throw ConfigError("decompose: grid does not match the model");
  SpectralDecomposition sd;
  sd.grid = grid;
  sd.n = m.n();
  sd.require_center = opt.require_center;
  const int n = m.n();
  sd.A = discretized_generator(m, *grid);
  const int M = sd.dim();
  sd.L = grid->full_differentiation().topRows(n) - m.d_e_f_zero_matrix(*grid);

  Eigen::EigenSolver<Eigen::MatrixXd> es(sd.A, true);
  if (es.info() != Eigen::Success) throw NumericalError("decompose: eigenvalue computation failed");
  const Eigen::VectorXcd evals = es.eigenvalues();
  const Eigen::MatrixXcd evecs = es.eigenvectors();
  std::vector<cplx> ev(evals.data(), evals.data() + M);

  std::vector<int> order(M);
  for (int i = 0; i < M; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (ev[a].real() != ev[b].real()) return ev[a].real() > ev[b].real();
    return ev[a].imag() > ev[b].imag();
  });

  std::vector<cplx> value(M);
  std::vector<bool> retained(M);
  std::vector<RootClass> cls(M);
  for (int i = 0; i < M; ++i) {
    const double res = normalized_residual(m, ev[i]);
    retained[i] = res <= opt.residual_tol;
    value[i] = (opt.polish && retained[i]) ? polish_root(m, ev[i]) : ev[i];
    const double re = value[i].real();
    cls[i] = re > opt.tol_center ? RootClass::unstable : (re >= -opt.tol_center ? RootClass::center : RootClass::stable);
    if (!retained[i]) cls[i] = RootClass::stable;
  }
  for (int i : order) sd.roots.push_back({ev[i], value[i], normalized_residual(m, ev[i]), retained[i], cls[i]});

  // Right and left bases of the retained center and unstable parts.
  const Eigen::MatrixXd At = sd.A.transpose();
  Eigen::EigenSolver<Eigen::MatrixXd> es_left(At, true);
  const Eigen::VectorXcd evals_left = es_left.eigenvalues();
  const Eigen::MatrixXcd evecs_left = es_left.eigenvectors();

  auto build = [&](RootClass which, Eigen::MatrixXd& right, Eigen::MatrixXd& left, Eigen::MatrixXd& B) {
    std::vector<int> idx;
    for (int i : order)
      if (retained[i] && cls[i] == which && ev[i].imag() >= -opt.cluster_tol * std::max(1.0, std::abs(ev[i])))
        idx.push_back(i);
    std::vector<int> upper, real_axis;
    for (int i : idx)
      (std::abs(ev[i].imag()) <= opt.cluster_tol * std::max(1.0, std::abs(ev[i])) ? real_axis : upper).push_back(i);
    std::vector<Eigen::MatrixXd> rcols, lcols;
    auto process = [&](const std::vector<int>& group, bool is_real) {
      for (const auto& cl : cluster(ev, group, opt.cluster_tol)) {
        // real-axis clusters also collect members with small negative imaginary parts
        Cluster full = cl;
        if (is_real) {
          full.members.clear();
          for (int i = 0; i < M; ++i)
            if (retained[i] && std::abs(ev[i] - cl.center) <= opt.cluster_tol * std::max(1.0, std::abs(cl.center)))
              full.members.push_back(i);
          cplx s = 0.0;
          for (int i : full.members) s += ev[i];
          full.center = s / static_cast<double>(full.members.size());
        }
        const int size = static_cast<int>(full.members.size());
        if (size > opt.max_jordan)
          throw NumericalError("decompose: eigenvalue cluster of size " + std::to_string(size) + " near " +
                               std::to_string(full.center.real()) + (full.center.imag() >= 0 ? "+" : "") +
                               std::to_string(full.center.imag()) + "i exceeds the supported Jordan length");
        rcols.push_back(realified_space(sd.A, full, evecs, is_real, true));
        // matching left cluster
        Cluster lc;
        lc.center = full.center;
        std::vector<std::pair<double, int>> dist;
        for (int i = 0; i < M; ++i) dist.push_back({std::abs(evals_left(i) - full.center), i});
        std::sort(dist.begin(), dist.end());
        for (int j = 0; j < size; ++j) lc.members.push_back(dist[j].second);
        lcols.push_back(realified_space(At, lc, evecs_left, is_real, true));
      }
    };
    process(real_axis, true);
    process(upper, false);
    int cols = 0;
    for (const auto& c : rcols) cols += static_cast<int>(c.cols());
    right.resize(M, cols);
    left.resize(M, cols);
    int at = 0;
    for (std::size_t i = 0; i < rcols.size(); ++i) {
      right.middleCols(at, rcols[i].cols()) = rcols[i];
      left.middleCols(at, lcols[i].cols()) = lcols[i];
      at += static_cast<int>(rcols[i].cols());
    }
    B = right.size() == 0 ? Eigen::MatrixXd(0, 0)
                          : Eigen::MatrixXd(right.colPivHouseholderQr().solve(sd.A * right));
  };

  Eigen::MatrixXd left_c, left_u;
  build(RootClass::center, sd.basis_c, left_c, sd.B_c);
  build(RootClass::unstable, sd.basis_u, left_u, sd.B_u);
  sd.d_c = static_cast<int>(sd.basis_c.cols());
  sd.d_u = static_cast<int>(sd.basis_u.cols());
  if (sd.d_c == 0 && opt.require_center)
    throw NoCenterError("decompose: no center directions (no characteristic root on the imaginary axis)");

  const int d_cu = sd.d_c + sd.d_u;
  Eigen::MatrixXd Phi_cu(M, d_cu), Psi_cu(M, d_cu);
  Phi_cu << sd.basis_c, sd.basis_u;
  Psi_cu << left_c, left_u;
  sd.left_cu = Psi_cu;
  if (d_cu > 0) {
    sd.commutation_residual = std::max(max_abs(sd.A * sd.basis_c - sd.basis_c * sd.B_c),
                                       max_abs(sd.A * sd.basis_u - sd.basis_u * sd.B_u));
    if (smallest_singular_value(Psi_cu.transpose() * Phi_cu) < 1e-10)
      throw NumericalError("decompose: left and right invariant subspaces are not in duality");
  }

  // E_s = ker Ψ_cuᵀ; Y_s = E_s ∩ ker L.
  Eigen::MatrixXd Q_s;
  if (d_cu > 0) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Psi_cu);
    const Eigen::MatrixXd Q = qr.householderQ();
    Q_s = Q.rightCols(M - d_cu);
  } else {
    Q_s = Eigen::MatrixXd::Identity(M, M);
  }
  {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(sd.L * Q_s, Eigen::ComputeFullV);
    if (svd.singularValues().minCoeff() < 1e-10 * std::max(1.0, svd.singularValues().maxCoeff()))
      throw NumericalError("decompose: the linearized constraint is degenerate on the stable part");
    sd.basis_s = Q_s * svd.matrixV().rightCols(Q_s.cols() - n);
    // Z: the orthogonal complement of Y_s inside E_s
    sd.basis_z = Q_s * svd.matrixV().leftCols(n);
  }
  sd.d_s = static_cast<int>(sd.basis_s.cols());

  sd.T.resize(M, M);
  sd.T << sd.basis_c, sd.basis_u, sd.basis_s, sd.basis_z;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(sd.T);
  sd.Tinv = lu.inverse();
  sd.proj_c = sd.basis_c * sd.Tinv.middleRows(sd.off_c(), sd.d_c);
  sd.proj_u = sd.basis_u * sd.Tinv.middleRows(sd.off_u(), sd.d_u);
  sd.proj_Ys = sd.basis_s * sd.Tinv.middleRows(sd.off_s(), sd.d_s);
  sd.proj_Z = sd.basis_z * sd.Tinv.middleRows(sd.off_z(), n);
  sd.L_Y = sd.L * (sd.proj_Ys + sd.proj_Z);
  sd.M_z = sd.L * sd.basis_z;
  {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(sd.M_z);
    const Eigen::VectorXd sv = svd.singularValues();
    sd.transversality_cond = sv(0) / sv(sv.size() - 1);
  }

  const Eigen::MatrixXd TAT = sd.Tinv * sd.A * sd.T;
  const int dy = sd.d_y();
  sd.B_c = TAT.block(sd.off_c(), sd.off_c(), sd.d_c, sd.d_c);
  sd.B_u = TAT.block(sd.off_u(), sd.off_u(), sd.d_u, sd.d_u);
  sd.B_s = TAT.block(sd.off_s(), sd.off_s(), sd.d_s, sd.d_s);
  Eigen::MatrixXd off = TAT.topRows(dy);
  off.block(sd.off_c(), sd.off_c(), sd.d_c, sd.d_c).setZero();
  off.block(sd.off_u(), sd.off_u(), sd.d_u, sd.d_u).setZero();
  off.block(sd.off_s(), sd.off_s(), sd.d_s, sd.d_s).setZero();
  off.rightCols(n).setZero();
  sd.block_residual = max_abs(off);
  sd.coupling_z = TAT.topRightCorner(dy, n);
  if (sd.d_s > 0) {
    Eigen::EigenSolver<Eigen::MatrixXd> bs(sd.B_s, false);
    sd.max_re_stable_block = bs.eigenvalues().real().maxCoeff();
  }
  return sd;
}

/// Chart of the solution manifold: K = P (projection onto Y along Z) and its
/// local inverse R(y) = y + Zb z(y) with z from Newton on the constraint.
class ChartAtlas {
 public:
  ChartAtlas(const DelayModel& m, const SpectralDecomposition& sd) : m_(&m), sd_(&sd) {
    const int M = sd.dim();
    P = Eigen::MatrixXd::Identity(M, M) - sd.proj_Z;
    Z_basis = sd.basis_z;
    Df0 = m.d_e_f_zero_matrix(*sd.grid);
    transversality_cond = sd.transversality_cond;
  }

  Eigen::MatrixXd P;
  Eigen::MatrixXd Z_basis;
  Eigen::MatrixXd Df0;
  double transversality_cond = 0.0;

  const SpectralDecomposition& decomposition() const { return *sd_; }
  const DelayModel& model() const { return *m_; }

  /// K(φ) = Pφ.
  Eigen::VectorXd K(const Eigen::VectorXd& x) const { return P * x; }

  /// Residual of the discrete X_f constraint L_Y x - (f(x) - D_e f(0)x).
  Eigen::VectorXd constraint(const Eigen::VectorXd& x) const {
    const Segment s = Segment::from_vector(sd_->grid, x);
    return sd_->L_Y * x - (m_->f_eval(s) - Df0 * x);
  }

  /// R(y) for y ∈ Y; throws NonconvergenceError if Newton fails.
  Eigen::VectorXd R(const Eigen::VectorXd& y, double tol = 1e-14, int max_iter = 30, int* iterations = nullptr) const {
    const int n = sd_->n;
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd x = y;
    std::vector<Segment> zcols;
    for (int i = 0; i < n; ++i) zcols.push_back(Segment::from_vector(sd_->grid, Z_basis.col(i)));
    const double scale = std::max(1.0, y.cwiseAbs().maxCoeff());
    double prev = INFINITY;
    for (int it = 0; it <= max_iter; ++it) {
      const Eigen::VectorXd res = constraint(x);
      const double r = res.cwiseAbs().maxCoeff();
      if (r <= tol * scale || (it > 2 && r >= prev && r <= 1e-12 * scale)) {
        if (iterations) *iterations = it;
        return x;
      }
      prev = r;
      if (it == max_iter) break;
      const Segment xs = Segment::from_vector(sd_->grid, x);
      Eigen::MatrixXd J(n, n);
      for (int i = 0; i < n; ++i)
        J.col(i) = sd_->M_z.col(i) - (m_->df_eval(xs, zcols[i]) - Df0 * Z_basis.col(i));
      z -= J.partialPivLu().solve(res);
      x = y + Z_basis * z;
    }
    throw NonconvergenceError("chart: Newton for R did not converge");
  }

 private:
  const DelayModel* m_;
  const SpectralDecomposition* sd_;
};

inline ChartAtlas build_chart(const DelayModel& m, const SpectralDecomposition& sd) {
  if (sd.transversality_cond > 1e12)
    throw NumericalError("chart: Z is not transversal to Y (condition " + std::to_string(sd.transversality_cond) + ")");
  return ChartAtlas(m, sd);
}

enum class Subspace { center, unstable };

/// max over basis vectors b of ‖(I - P_sub) v_t‖ / ‖b‖, v solving the linearized equation from b.
inline double linear_flow_invariance(const DelayModel& m, const SpectralDecomposition& sd, double t, Subspace sub,
                                     double dt = 1e-3) {
  if (t == 0.0) return 0.0;
  if (!(t > 0.0)) throw DomainError("linear_flow_invariance: t must be positive");
  const Eigen::MatrixXd& basis = sub == Subspace::center ? sd.basis_c : sd.basis_u;
  const Eigen::MatrixXd& proj = sub == Subspace::center ? sd.proj_c : sd.proj_u;
  const DelayModel lin = m.linearized();
  const int M = sd.dim();
  double worst = 0.0;
  for (int j = 0; j < basis.cols(); ++j) {
    const Segment b = Segment::from_vector(sd.grid, basis.col(j));
    const Segment vt = flow_map(lin, b, t, dt);
    const Eigen::VectorXd x = vt.as_vector();
    const Eigen::VectorXd off = (Eigen::MatrixXd::Identity(M, M) - proj) * x;
    worst = std::max(worst, off.cwiseAbs().maxCoeff() / b.norm_C());
  }
  return worst;
}

}  // namespace cmsd
