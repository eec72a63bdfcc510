#pragma once

// Polynomial graphs of the local center-stable, center-unstable and center
// manifolds, computed order by order from the invariance equations of the
// discretized system written in chart coordinates y = (c, u, s):
//
//   y' = Λ y + Ĝ N(x),   x = Φ_Y y + Z z,   z = M_z⁻¹ N(x),
//
// where N = f - D_e f(0) is the nonlinear part of f and Λ = diag(B_c, B_u, B_s).

#include <complex>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "cmsd/error.hpp"
#include "cmsd/model.hpp"
#include "cmsd/series.hpp"
#include "cmsd/spectral.hpp"

namespace cmsd {

enum class GraphKind { center_stable, center_unstable, center };

inline const char* to_string(GraphKind k) {
  switch (k) {
    case GraphKind::center_stable: return "center_stable";
    case GraphKind::center_unstable: return "center_unstable";
    case GraphKind::center: return "center";
  }
  return "?";
}

/// Coordinate block of the splitting: c, u, s (Y_s) or z.
enum class Block { c, u, s, z };

inline const char* to_string(Block b) {
  switch (b) {
    case Block::c: return "c";
    case Block::u: return "u";
    case Block::s: return "s";
    case Block::z: return "z";
  }
  return "?";
}

/// A polynomial map w from domain coordinates to codomain coordinates with
/// w(0) = 0 and Dw(0) = 0.
class GraphMap {
 public:
  GraphMap() = default;
  GraphMap(GraphKind kind, std::vector<std::pair<Block, int>> domain, std::vector<std::pair<Block, int>> codomain,
           int order)
      : kind_(kind), domain_(std::move(domain)), codomain_(std::move(codomain)), order_(order) {
    d_ = 0;
    for (auto& b : domain_) d_ += b.second;
    q_ = 0;
    for (auto& b : codomain_) q_ += b.second;
    basis_ = monomial_basis(d_, order_);
    coeffs_ = Eigen::MatrixXd::Zero(q_, basis_->size());
  }

  GraphKind kind() const { return kind_; }
  int domain_dim() const { return d_; }
  int codomain_dim() const { return q_; }
  int order() const { return order_; }
  const BasisPtr& basis() const { return basis_; }
  const std::vector<std::pair<Block, int>>& domain_blocks() const { return domain_; }
  const std::vector<std::pair<Block, int>>& codomain_blocks() const { return codomain_; }

  /// Coefficient matrix (codomain_dim x basis size); columns of degree < 2 stay zero.
  const Eigen::MatrixXd& coeffs() const { return coeffs_; }

  void set_component(int q, const Series& s) {
    coeffs_.row(q) = s.coeffs().transpose();
    const int lin_end = basis_->offset(2);
    coeffs_.row(q).head(lin_end).setZero();
  }
  Series component(int q) const { return Series(basis_, coeffs_.row(q).transpose()); }

  /// Offset of a block inside the domain / codomain vector (-1 if absent).
  int domain_offset(Block b) const { return offset_of(domain_, b); }
  int codomain_offset(Block b) const { return offset_of(codomain_, b); }
  int domain_size(Block b) const { return size_of(domain_, b); }
  int codomain_size(Block b) const { return size_of(codomain_, b); }

  double domain_radius() const { return radius_; }
  void set_domain_radius(double r) { radius_ = r; }
  bool in_box(const Eigen::VectorXd& xi) const { return xi.size() == 0 || xi.cwiseAbs().maxCoeff() <= radius_; }

  Eigen::VectorXd eval(const Eigen::VectorXd& xi) const {
    check_arg(xi);
    if (d_ == 0) return Eigen::VectorXd::Zero(q_);
    return coeffs_ * Series::monomial_values(*basis_, {xi.data(), static_cast<std::size_t>(d_)});
  }

  /// Jacobian, codomain_dim x domain_dim.
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& xi) const {
    check_arg(xi);
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(q_, d_);
    if (d_ == 0) return J;
    const MonomialBasis& B = *basis_;
    const Eigen::VectorXd mv = Series::monomial_values(B, {xi.data(), static_cast<std::size_t>(d_)});
    for (int i = B.offset(2); i < B.size(); ++i) {
      const auto* e = B.exponents(i);
      for (int v = 0; v < d_; ++v)
        if (e[v]) J.col(v) += (e[v] * mv(B.lower(i, v))) * coeffs_.col(i);
    }
    return J;
  }

  /// Max |coefficient| over all codomain components of degree m.
  double degree_norm(int m) const {
    const int a = basis_->offset(m), b = basis_->offset(m + 1);
    return b > a && q_ > 0 ? coeffs_.middleCols(a, b - a).cwiseAbs().maxCoeff() : 0.0;
  }

  /// Invariance-defect polynomial coefficients (max abs) through degree k, set by solve_graph.
  double resubstitution_defect = 0.0;

 private:
  static int offset_of(const std::vector<std::pair<Block, int>>& v, Block b) {
    int off = 0;
    for (auto& p : v) {
      if (p.first == b) return off;
      off += p.second;
    }
    return -1;
  }
  static int size_of(const std::vector<std::pair<Block, int>>& v, Block b) {
    for (auto& p : v)
      if (p.first == b) return p.second;
    return 0;
  }
  void check_arg(const Eigen::VectorXd& xi) const {
    if (xi.size() != d_) throw ConfigError("graph: argument has wrong dimension");
  }

  GraphKind kind_ = GraphKind::center;
  std::vector<std::pair<Block, int>> domain_, codomain_;
  int d_ = 0, q_ = 0, order_ = 2;
  BasisPtr basis_;
  Eigen::MatrixXd coeffs_;
  double radius_ = 0.05;
};

/// The discretized system in chart coordinates.
struct ReducedDynamics {
  const SpectralDecomposition* sd = nullptr;
  int n = 1, order = 3;
  int d_c = 0, d_u = 0, d_s = 0;
  Eigen::MatrixXd Lambda;   // d_y x d_y, block diagonal
  Eigen::MatrixXd G;        // d_y x n, T⁻¹ restricted to Y rows, node-0 columns
  Eigen::MatrixXd Fy, Fz;   // features of Φ_Y y and of Z z
  Eigen::MatrixXd Mz_inv;
  std::vector<Series> fnl;  // nonlinear part of f over the features
  std::vector<cplx> eig_c, eig_u, eig_s;

  int d_y() const { return d_c + d_u + d_s; }
  int offset(Block b) const {
    switch (b) {
      case Block::c: return 0;
      case Block::u: return d_c;
      case Block::s: return d_c + d_u;
      case Block::z: return d_c + d_u + d_s;
    }
    return 0;
  }
  int size(Block b) const {
    switch (b) {
      case Block::c: return d_c;
      case Block::u: return d_u;
      case Block::s: return d_s;
      case Block::z: return n;
    }
    return 0;
  }
};

inline ReducedDynamics reduce(const DelayModel& m, const SpectralDecomposition& sd, int k) {
  if (k < 2 || k > 5) throw ConfigError("graphs: order k must be in [2, 5]");
  ReducedDynamics r;
  r.sd = &sd;
  r.n = sd.n;
  r.order = k;
  r.d_c = sd.d_c;
  r.d_u = sd.d_u;
  r.d_s = sd.d_s;
  const int dy = sd.d_y();
  r.Lambda = Eigen::MatrixXd::Zero(dy, dy);
  r.Lambda.block(sd.off_c(), sd.off_c(), sd.d_c, sd.d_c) = sd.B_c;
  r.Lambda.block(sd.off_u(), sd.off_u(), sd.d_u, sd.d_u) = sd.B_u;
  r.Lambda.block(sd.off_s(), sd.off_s(), sd.d_s, sd.d_s) = sd.B_s;
  // Z is not A-invariant: A Z z enters the stable rows with z = M_z⁻¹ N
  r.G = sd.Tinv.topRows(dy).leftCols(sd.n) + sd.coupling_z * sd.M_z.inverse();
  const TaylorF tf = m.taylor_f(*sd.grid, k);
  r.Fy = tf.features * sd.T.leftCols(dy);
  r.Fz = tf.features * sd.basis_z;
  r.Mz_inv = sd.M_z.inverse();
  r.fnl = tf.nonlinear();
  auto eig = [](const Eigen::MatrixXd& B) {
    std::vector<cplx> out;
    if (B.rows() == 0) return out;
    Eigen::EigenSolver<Eigen::MatrixXd> es(B, false);
    for (int i = 0; i < B.rows(); ++i) out.push_back(es.eigenvalues()(i));
    return out;
  };
  r.eig_c = eig(sd.B_c);
  r.eig_u = eig(sd.B_u);
  r.eig_s = eig(sd.B_s);
  return r;
}

namespace graphs_detail {

inline std::vector<Block> domain_of(GraphKind k) {
  switch (k) {
    case GraphKind::center_stable: return {Block::c, Block::s};
    case GraphKind::center_unstable: return {Block::c, Block::u};
    case GraphKind::center: return {Block::c};
  }
  return {};
}
inline std::vector<Block> codomain_of(GraphKind k) {
  switch (k) {
    case GraphKind::center_stable: return {Block::u};
    case GraphKind::center_unstable: return {Block::s};
    case GraphKind::center: return {Block::u, Block::s};
  }
  return {};
}

/// N(x(ξ)) for x = Φ_D ξ + Φ_Q h + Z z, all as series in ξ, truncated at degree m.
inline std::vector<Series> nonlinearity(const ReducedDynamics& r, const std::vector<int>& dom_idx,
                                        const std::vector<int>& cod_idx, const std::vector<Series>& h,
                                        const std::vector<Series>& z, const BasisPtr& basis, int m) {
  const int F = static_cast<int>(r.Fy.rows());
  std::vector<Series> feat(F, Series(basis));
  for (int f = 0; f < F; ++f) {
    Series& v = feat[f];
    for (std::size_t j = 0; j < dom_idx.size(); ++j) v[1 + static_cast<int>(j)] = r.Fy(f, dom_idx[j]);
    for (std::size_t q = 0; q < cod_idx.size(); ++q) {
      const double a = r.Fy(f, cod_idx[q]);
      if (a != 0.0) v.coeffs() += a * h[q].coeffs();
    }
    for (int i = 0; i < r.n; ++i) {
      const double a = r.Fz(f, i);
      if (a != 0.0) v.coeffs() += a * z[i].coeffs();
    }
    v = v.degree_range(1, m - 1);
  }
  std::vector<Series> N;
  for (const auto& p : r.fnl) N.push_back(compose(p, feat).degree_range(2, m));
  return N;
}

/// Σ_v ∂_v h · w_v restricted to degree m (∂h has degree >= 1, w degree >= 2).
inline Series directional(const Series& hq, const std::vector<Series>& w, int m) {
  Series out(hq.basis());
  for (int v = 0; v < hq.num_vars(); ++v) {
    const Series dh = hq.derivative(v).degree_range(1, m - 2);
    if (dh.valuation() > m - 2) continue;
    const Series wv = w[v].degree_range(2, m - 1);
    if (wv.valuation() > m - 1) continue;
    out += (dh * wv).degree_range(m, m);
  }
  return out;
}

}  // namespace graphs_detail

/// Order-by-order solution of the invariance equations for the requested graph.
inline GraphMap solve_graph(const ReducedDynamics& r, GraphKind kind) {
  using namespace graphs_detail;
  const int k = r.order;
  if (r.d_c == 0 && r.sd->require_center) throw NoCenterError("graphs: no center directions");

  std::vector<std::pair<Block, int>> dom, cod;
  std::vector<int> dom_idx, cod_idx;
  std::vector<cplx> mu, nu;
  auto eig_of = [&](Block b) -> const std::vector<cplx>& {
    return b == Block::c ? r.eig_c : (b == Block::u ? r.eig_u : r.eig_s);
  };
  for (Block b : domain_of(kind)) {
    dom.push_back({b, r.size(b)});
    for (int i = 0; i < r.size(b); ++i) dom_idx.push_back(r.offset(b) + i);
    for (auto e : eig_of(b)) mu.push_back(e);
  }
  for (Block b : codomain_of(kind)) {
    cod.push_back({b, r.size(b)});
    for (int i = 0; i < r.size(b); ++i) cod_idx.push_back(r.offset(b) + i);
    for (auto e : eig_of(b)) nu.push_back(e);
  }
  cod.push_back({Block::z, r.n});

  GraphMap w(kind, dom, cod, k);
  const int d = w.domain_dim();
  const int dq = static_cast<int>(cod_idx.size());
  const BasisPtr basis = w.basis();
  const MonomialBasis& B = *basis;

  Eigen::MatrixXd LD(d, d), LQ(dq, dq);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) LD(i, j) = r.Lambda(dom_idx[i], dom_idx[j]);
  for (int i = 0; i < dq; ++i)
    for (int j = 0; j < dq; ++j) LQ(i, j) = r.Lambda(cod_idx[i], cod_idx[j]);
  Eigen::MatrixXd GD(d, r.n), GQ(dq, r.n);
  for (int i = 0; i < d; ++i) GD.row(i) = r.G.row(dom_idx[i]);
  for (int i = 0; i < dq; ++i) GQ.row(i) = r.G.row(cod_idx[i]);

  std::vector<Series> h(dq, Series(basis)), z(r.n, Series(basis));
  if (d == 0) {
    w.resubstitution_defect = 0.0;
    return w;
  }

  auto mix = [&](const Eigen::MatrixXd& Mat, const std::vector<Series>& s) {
    std::vector<Series> out(Mat.rows(), Series(basis));
    for (int i = 0; i < Mat.rows(); ++i)
      for (int j = 0; j < Mat.cols(); ++j)
        if (Mat(i, j) != 0.0) out[i].coeffs() += Mat(i, j) * s[j].coeffs();
    return out;
  };

  for (int m = 2; m <= k; ++m) {
    const std::vector<Series> N = nonlinearity(r, dom_idx, cod_idx, h, z, basis, m);
    const std::vector<Series> GDN = mix(GD, N);
    const int a0 = B.offset(m), cnt = B.count_of_degree(m);

    if (dq > 0) {
      const std::vector<Series> GQN = mix(GQ, N);
      // nonresonance: Σ α_j μ_j ≠ ν_q for every degree-m multi-index
      for (int a = a0; a < a0 + cnt; ++a) {
        const auto* e = B.exponents(a);
        cplx s = 0.0;
        for (int j = 0; j < d; ++j) s += static_cast<double>(e[j]) * mu[j];
        for (int q = 0; q < dq; ++q) {
          if (std::abs(s - nu[q]) < 1e-8) {
            std::ostringstream os;
            os << "graphs: resonance at order " << m << " in the " << to_string(kind) << " graph: ";
            os << "Σ α_j μ_j = " << s << " meets codomain eigenvalue " << nu[q];
            throw ResonanceError(os.str());
          }
        }
      }
      Eigen::VectorXd rhs(cnt * dq);
      for (int q = 0; q < dq; ++q) {
        const Series rq = GQN[q].degree_range(m, m) - directional(h[q], GDN, m);
        for (int a = 0; a < cnt; ++a) rhs(a * dq + q) = rq[a0 + a];
      }
      std::vector<Eigen::Triplet<double>> trip;
      for (int a = 0; a < cnt; ++a) {
        const int alpha = a0 + a;
        const auto* e = B.exponents(alpha);
        for (int j = 0; j < d; ++j) {
          if (!e[j]) continue;
          const int low = B.lower(alpha, j);
          for (int l = 0; l < d; ++l) {
            const double lam = LD(j, l);
            if (lam == 0.0) continue;
            const int beta = B.raise(low, l) - a0;
            for (int q = 0; q < dq; ++q) trip.emplace_back(beta * dq + q, a * dq + q, e[j] * lam);
          }
        }
        for (int q = 0; q < dq; ++q)
          for (int p = 0; p < dq; ++p)
            if (LQ(q, p) != 0.0) trip.emplace_back(a * dq + q, a * dq + p, -LQ(q, p));
      }
      Eigen::SparseMatrix<double> S(cnt * dq, cnt * dq);
      S.setFromTriplets(trip.begin(), trip.end());
      S.makeCompressed();
      Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
      lu.compute(S);
      if (lu.info() != Eigen::Success)
        throw ResonanceError("graphs: singular homological operator at order " + std::to_string(m));
      const Eigen::VectorXd sol = lu.solve(rhs);
      if (lu.info() != Eigen::Success || !sol.allFinite())
        throw ResonanceError("graphs: homological solve failed at order " + std::to_string(m));
      for (int q = 0; q < dq; ++q)
        for (int a = 0; a < cnt; ++a) h[q][a0 + a] = sol(a * dq + q);
    }
    const std::vector<Series> zN = mix(r.Mz_inv, N);
    for (int i = 0; i < r.n; ++i) z[i].coeffs().segment(a0, cnt) = zN[i].coeffs().segment(a0, cnt);
  }

  for (int q = 0; q < dq; ++q) w.set_component(q, h[q]);
  for (int i = 0; i < r.n; ++i) w.set_component(dq + i, z[i]);

  // resubstitution through degree k
  double defect = 0.0;
  {
    const int F = static_cast<int>(r.Fy.rows());
    std::vector<Series> feat(F, Series(basis));
    for (int f = 0; f < F; ++f) {
      for (int j = 0; j < d; ++j) feat[f][1 + j] = r.Fy(f, dom_idx[j]);
      for (int q = 0; q < dq; ++q) feat[f].coeffs() += r.Fy(f, cod_idx[q]) * h[q].coeffs();
      for (int i = 0; i < r.n; ++i) feat[f].coeffs() += r.Fz(f, i) * z[i].coeffs();
    }
    std::vector<Series> Nf;
    for (const auto& p : r.fnl) Nf.push_back(compose(p, feat).degree_range(2, k));
    const std::vector<Series> GDN = mix(GD, Nf), GQN = mix(GQ, Nf);
    std::vector<Series> lin(d, Series(basis));
    for (int j = 0; j < d; ++j)
      for (int l = 0; l < d; ++l)
        if (LD(j, l) != 0.0) lin[j][1 + l] += LD(j, l);
    for (int q = 0; q < dq; ++q) {
      Series lhs(basis);
      for (int v = 0; v < d; ++v) lhs += h[q].derivative(v) * (lin[v] + GDN[v]);
      Series rhs = GQN[q];
      for (int p = 0; p < dq; ++p)
        if (LQ(q, p) != 0.0) rhs += LQ(q, p) * h[p];
      defect = std::max(defect, (lhs - rhs).degree_range(0, k).coeffs().cwiseAbs().maxCoeff());
    }
    const std::vector<Series> zN = mix(r.Mz_inv, Nf);
    for (int i = 0; i < r.n; ++i)
      defect = std::max(defect, (z[i] - zN[i]).degree_range(0, k).coeffs().cwiseAbs().maxCoeff());
  }
  w.resubstitution_defect = defect;
  return w;
}

/// The center graph computed directly over C_c.
inline GraphMap center_graph_oracle(const ReducedDynamics& r) {
  return solve_graph(r, GraphKind::center);
}

}  // namespace cmsd
