#pragma once

// The center graph as the intersection of the center-stable and the
// center-unstable graph. With coordinates (c, u, s) on Y,
//
//   G(c, u, s) = ( u - [w_cs(c, s)]_u ,  s - [w_cu(c, u)]_s ),
//
// g(c) = (u, s) solves G = 0, and w_c(c) = (π₁g(c), w_cu(c, π₁g(c))).

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cmsd/error.hpp"
#include "cmsd/graphs.hpp"
#include "cmsd/segment.hpp"
#include "cmsd/series.hpp"
#include "cmsd/spectral.hpp"

namespace cmsd {

struct ImplicitSystem {
  const GraphMap* w_cs = nullptr;  // (c, s) -> (u, z)
  const GraphMap* w_cu = nullptr;  // (c, u) -> (s, z)
  const SpectralDecomposition* sd = nullptr;
  int d_c = 0, d_u = 0, d_s = 0, n = 1;

  ImplicitSystem(const GraphMap& cs, const GraphMap& cu, const SpectralDecomposition& decomp)
      : w_cs(&cs), w_cu(&cu), sd(&decomp), d_c(decomp.d_c), d_u(decomp.d_u), d_s(decomp.d_s), n(decomp.n) {
    if (cs.kind() != GraphKind::center_stable || cu.kind() != GraphKind::center_unstable)
      throw ConfigError("implicit system: needs a center-stable and a center-unstable graph");
    if (cs.domain_dim() != d_c + d_s || cs.codomain_dim() != d_u + n || cu.domain_dim() != d_c + d_u ||
        cu.codomain_dim() != d_s + n)
      throw ConfigError("implicit system: graph dimensions do not match the splitting");
  }

  int d_us() const { return d_u + d_s; }

  Eigen::VectorXd cs_arg(const Eigen::VectorXd& c, const Eigen::VectorXd& s) const {
    Eigen::VectorXd a(d_c + d_s);
    a << c, s;
    return a;
  }
  Eigen::VectorXd cu_arg(const Eigen::VectorXd& c, const Eigen::VectorXd& u) const {
    Eigen::VectorXd a(d_c + d_u);
    a << c, u;
    return a;
  }
};

/// G(c, u, s) stacked as (res_u, res_s).
inline Eigen::VectorXd G_eval(const ImplicitSystem& sys, const Eigen::VectorXd& c, const Eigen::VectorXd& u,
                              const Eigen::VectorXd& s) {
  Eigen::VectorXd out(sys.d_us());
  out.head(sys.d_u) = u - sys.w_cs->eval(sys.cs_arg(c, s)).head(sys.d_u);
  out.tail(sys.d_s) = s - sys.w_cu->eval(sys.cu_arg(c, u)).head(sys.d_s);
  return out;
}

/// D_(2,3)G = [[I, -∂_s w_cs^u], [-∂_u w_cu^s, I]].
inline Eigen::MatrixXd G_jacobian_23(const ImplicitSystem& sys, const Eigen::VectorXd& c, const Eigen::VectorXd& u,
                                     const Eigen::VectorXd& s) {
  const int du = sys.d_u, ds = sys.d_s, dc = sys.d_c;
  Eigen::MatrixXd J = Eigen::MatrixXd::Identity(du + ds, du + ds);
  if (du > 0 && ds > 0) {
    const Eigen::MatrixXd Jcs = sys.w_cs->jacobian(sys.cs_arg(c, s));
    const Eigen::MatrixXd Jcu = sys.w_cu->jacobian(sys.cu_arg(c, u));
    J.topRightCorner(du, ds) = -Jcs.block(0, dc, du, ds);
    J.bottomLeftCorner(ds, du) = -Jcu.block(0, dc, ds, du);
  }
  return J;
}

/// D_1G = [-∂_c w_cs^u ; -∂_c w_cu^s].
inline Eigen::MatrixXd G_jacobian_1(const ImplicitSystem& sys, const Eigen::VectorXd& c, const Eigen::VectorXd& u,
                                    const Eigen::VectorXd& s) {
  Eigen::MatrixXd J(sys.d_us(), sys.d_c);
  J.topRows(sys.d_u) = -sys.w_cs->jacobian(sys.cs_arg(c, s)).block(0, 0, sys.d_u, sys.d_c);
  J.bottomRows(sys.d_s) = -sys.w_cu->jacobian(sys.cu_arg(c, u)).block(0, 0, sys.d_s, sys.d_c);
  return J;
}

struct NewtonRecord {
  int iterations = 0;
  double residual = 0.0;
  double jacobian_cond = 1.0;
  bool out_of_box = false;
  bool continuation = false;
  std::vector<double> history;
};

struct GSolution {
  Eigen::VectorXd u, s;
  NewtonRecord record;
};

namespace intersection_detail {

inline double cond(const Eigen::MatrixXd& J) {
  if (J.size() == 0) return 1.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
  const auto& sv = svd.singularValues();
  return sv(0) / sv(sv.size() - 1);
}

inline bool newton(const ImplicitSystem& sys, const Eigen::VectorXd& c, Eigen::VectorXd& u, Eigen::VectorXd& s,
                   double tol, int max_iter, NewtonRecord& rec) {
  for (int it = 0; it <= max_iter; ++it) {
    const Eigen::VectorXd res = G_eval(sys, c, u, s);
    const double r = res.size() ? res.cwiseAbs().maxCoeff() : 0.0;
    rec.history.push_back(r);
    rec.residual = r;
    if (!std::isfinite(r)) return false;
    if (r <= tol) return true;
    if (it == max_iter) break;
    const Eigen::MatrixXd J = G_jacobian_23(sys, c, u, s);
    rec.jacobian_cond = std::max(rec.jacobian_cond, cond(J));
    const Eigen::VectorXd step = J.partialPivLu().solve(res);
    u -= step.head(sys.d_u);
    s -= step.tail(sys.d_s);
    ++rec.iterations;
    // stagnation at roundoff level
    if (it >= 3 && r <= 100 * tol && rec.history[it - 1] <= r) return true;
  }
  return false;
}

}  // namespace intersection_detail

/// g(c) = (u, s) by Newton from (0, 0); continuation along the ray to c if that fails.
inline GSolution solve_g(const ImplicitSystem& sys, const Eigen::VectorXd& c, double tol = 1e-12, int max_iter = 50) {
  if (c.size() != sys.d_c) throw ConfigError("solve_g: center coordinate has wrong dimension");
  GSolution sol;
  sol.u = Eigen::VectorXd::Zero(sys.d_u);
  sol.s = Eigen::VectorXd::Zero(sys.d_s);
  sol.record.out_of_box = !sys.w_cs->in_box(sys.cs_arg(c, sol.s)) || !sys.w_cu->in_box(sys.cu_arg(c, sol.u));
  if (intersection_detail::newton(sys, c, sol.u, sol.s, tol, max_iter, sol.record)) return sol;

  const std::vector<double> first = sol.record.history;
  sol.u.setZero();
  sol.s.setZero();
  sol.record = NewtonRecord{};
  sol.record.continuation = true;
  const int steps = 8;
  for (int j = 1; j <= steps; ++j) {
    NewtonRecord rec;
    const Eigen::VectorXd cj = (static_cast<double>(j) / steps) * c;
    if (!intersection_detail::newton(sys, cj, sol.u, sol.s, tol, max_iter, rec)) {
      std::string h;
      for (double v : first) h += " " + std::to_string(v);
      throw NonconvergenceError("solve_g: Newton failed (residual history:" + h + ")");
    }
    sol.record.iterations += rec.iterations;
    sol.record.residual = rec.residual;
    sol.record.jacobian_cond = std::max(sol.record.jacobian_cond, rec.jacobian_cond);
    sol.record.history.insert(sol.record.history.end(), rec.history.begin(), rec.history.end());
  }
  sol.record.out_of_box = !sys.w_cs->in_box(sys.cs_arg(c, sol.s)) || !sys.w_cu->in_box(sys.cu_arg(c, sol.u));
  return sol;
}

/// Point of Y with chart coordinates (c, u, s).
inline Eigen::VectorXd y_point(const SpectralDecomposition& sd, const Eigen::VectorXd& c, const Eigen::VectorXd& u,
                               const Eigen::VectorXd& s) {
  return sd.basis_c * c + sd.basis_u * u + sd.basis_s * s;
}

/// ψ = R(φ + π₁g(φ) + π₂g(φ)).
inline Segment lift(const ImplicitSystem& sys, const ChartAtlas& chart, const Eigen::VectorXd& c,
                    const GSolution* known = nullptr) {
  const GSolution sol = known ? *known : solve_g(sys, c);
  const Eigen::VectorXd y = y_point(*sys.sd, c, sol.u, sol.s);
  return Segment::from_vector(sys.sd->grid, chart.R(y));
}

/// Chart coordinates (u, s, z) of φ + w_c(φ) from the center-unstable route.
inline Eigen::VectorXd wc_point(const ImplicitSystem& sys, const Eigen::VectorXd& c, const GSolution& g) {
  Eigen::VectorXd out(sys.d_u + sys.d_s + sys.n);
  const Eigen::VectorXd cu = sys.w_cu->eval(sys.cu_arg(c, g.u));
  out << g.u, cu.head(sys.d_s), cu.tail(sys.n);
  return out;
}

/// Chart coordinates (u, s, z) of φ + π₂g(φ) + w_cs(φ + π₂g(φ)).
inline Eigen::VectorXd wc_alternative(const ImplicitSystem& sys, const Eigen::VectorXd& c, const GSolution& g) {
  Eigen::VectorXd out(sys.d_u + sys.d_s + sys.n);
  const Eigen::VectorXd cs = sys.w_cs->eval(sys.cs_arg(c, g.s));
  out << cs.head(sys.d_u), g.s, cs.tail(sys.n);
  return out;
}

inline Eigen::VectorXd wc_alternative(const ImplicitSystem& sys, const Eigen::VectorXd& c) {
  return wc_alternative(sys, c, solve_g(sys, c));
}

/// Dg(φ)ψ = -D_(2,3)G⁻¹ D_1G ψ, stacked (u, s).
inline Eigen::MatrixXd dg_matrix(const ImplicitSystem& sys, const Eigen::VectorXd& c, const GSolution& g) {
  const Eigen::MatrixXd J23 = G_jacobian_23(sys, c, g.u, g.s);
  const Eigen::MatrixXd J1 = G_jacobian_1(sys, c, g.u, g.s);
  if (J23.size() == 0) return Eigen::MatrixXd::Zero(0, sys.d_c);
  return -J23.partialPivLu().solve(J1);
}

/// Dw_c(φ)ψ = π₁Dg ψ + Dw_cu(φ + π₁g)[ψ + π₁Dg ψ], as (u, s, z).
inline Eigen::VectorXd dwc(const ImplicitSystem& sys, const Eigen::VectorXd& c, const Eigen::VectorXd& dir,
                           const GSolution& g) {
  const Eigen::MatrixXd Dg = dg_matrix(sys, c, g);
  const Eigen::VectorXd du = Dg.topRows(sys.d_u) * dir;
  const Eigen::MatrixXd Jcu = sys.w_cu->jacobian(sys.cu_arg(c, g.u));
  Eigen::VectorXd arg(sys.d_c + sys.d_u);
  arg << dir, du;
  const Eigen::VectorXd rest = Jcu * arg;
  Eigen::VectorXd out(sys.d_u + sys.d_s + sys.n);
  out << du, rest;
  return out;
}

inline Eigen::VectorXd dwc(const ImplicitSystem& sys, const Eigen::VectorXd& c, const Eigen::VectorXd& dir) {
  return dwc(sys, c, dir, solve_g(sys, c));
}

struct IntersectOptions {
  double tol = 1e-12;
  int max_iter = 50;
  /// Stencil for the pointwise route: points at radii stencil_radius·{1, 2/3, 1/3}.
  double stencil_radius = 2e-3;
  int stencil_size = 50;
  double consistency_tol = 1e-8;
  unsigned seed = 1;
};

struct IntersectionResult {
  /// Taylor polynomial of g: (u, s) components over the center coordinates.
  std::vector<Series> g_poly;
  /// w_c composed from g_poly and w_cu; codomain (u, s, z).
  GraphMap w_c;
  /// w_c fitted to pointwise solutions on the stencil.
  GraphMap w_c_fit;
  std::vector<Eigen::VectorXd> stencil;
  std::vector<NewtonRecord> newton;
  /// max over the stencil of |w_c(c) - w_c_fit(c)|.
  double consistency = 0.0;
  /// max over the stencil of |w_c(c) - pointwise value|.
  double pointwise_deviation = 0.0;
  double max_jacobian_cond = 1.0;
};

/// Deterministic stencil of `count` points of the center coordinate space.
inline std::vector<Eigen::VectorXd> center_stencil(int d_c, double radius, int count, unsigned seed) {
  std::vector<Eigen::VectorXd> pts;
  if (d_c == 0) return pts;
  std::mt19937 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double radii[3] = {1.0, 2.0 / 3.0, 1.0 / 3.0};
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd v(d_c);
    if (d_c == 2) {
      const double a = 2.0 * std::numbers::pi * (i * 0.6180339887498949 - std::floor(i * 0.6180339887498949));
      v << std::cos(a), std::sin(a);
    } else if (d_c == 1) {
      v << (i % 2 == 0 ? 1.0 : -1.0);
    } else {
      for (int j = 0; j < d_c; ++j) v(j) = normal(rng);
      v /= v.norm();
    }
    pts.push_back(radius * radii[i % 3] * v);
  }
  return pts;
}

inline IntersectionResult build_wc(const ImplicitSystem& sys, const IntersectOptions& opt = {}) {
  IntersectionResult res;
  const int k = sys.w_cs->order();
  const int dc = sys.d_c, du = sys.d_u, ds = sys.d_s, n = sys.n;
  std::vector<std::pair<Block, int>> dom{{Block::c, dc}}, cod{{Block::u, du}, {Block::s, ds}, {Block::z, n}};
  res.w_c = GraphMap(GraphKind::center, dom, cod, k);
  res.w_c_fit = GraphMap(GraphKind::center, dom, cod, k);
  if (dc == 0) return res;

  // route (a): fixed point u = w_cs^u(c, s), s = w_cu^s(c, u) on series
  const BasisPtr basis = res.w_c.basis();
  std::vector<Series> u(du, Series(basis)), s(ds, Series(basis));
  std::vector<Series> cvars;
  for (int i = 0; i < dc; ++i) cvars.push_back(Series::variable(basis, i));
  auto args = [&](const std::vector<Series>& tail) {
    std::vector<Series> a = cvars;
    a.insert(a.end(), tail.begin(), tail.end());
    return a;
  };
  for (int it = 0; it < k; ++it) {
    const auto a_cs = args(s), a_cu = args(u);
    std::vector<Series> nu(du, Series(basis)), ns(ds, Series(basis));
    for (int i = 0; i < du; ++i) nu[i] = compose(sys.w_cs->component(i), a_cs);
    for (int i = 0; i < ds; ++i) ns[i] = compose(sys.w_cu->component(i), a_cu);
    u = std::move(nu);
    s = std::move(ns);
  }
  res.g_poly = u;
  res.g_poly.insert(res.g_poly.end(), s.begin(), s.end());
  {
    const auto a_cu = args(u);
    for (int i = 0; i < du; ++i) res.w_c.set_component(i, u[i]);
    for (int i = 0; i < ds + n; ++i) res.w_c.set_component(du + i, compose(sys.w_cu->component(i), a_cu));
  }

  // route (b): pointwise solves on the stencil and a least-squares fit
  res.stencil = center_stencil(dc, opt.stencil_radius, opt.stencil_size, opt.seed);
  const MonomialBasis& B = *basis;
  const int first = B.offset(2), nmono = B.size() - first;
  const int P = static_cast<int>(res.stencil.size());
  Eigen::MatrixXd V(P, nmono), Y(P, du + ds + n);
  for (int p = 0; p < P; ++p) {
    const Eigen::VectorXd& c = res.stencil[p];
    const GSolution g = solve_g(sys, c, opt.tol, opt.max_iter);
    res.newton.push_back(g.record);
    res.max_jacobian_cond = std::max(res.max_jacobian_cond, g.record.jacobian_cond);
    Y.row(p) = wc_point(sys, c, g).transpose();
    V.row(p) = Series::monomial_values(B, {c.data(), static_cast<std::size_t>(dc)}).tail(nmono).transpose();
    res.pointwise_deviation = std::max(res.pointwise_deviation, (Y.row(p).transpose() - res.w_c.eval(c)).cwiseAbs().maxCoeff());
  }
  // column scaling keeps the normal equations of the monomial fit well conditioned
  Eigen::VectorXd scale(nmono);
  for (int j = 0; j < nmono; ++j) scale(j) = std::pow(opt.stencil_radius, B.degree(first + j));
  const Eigen::MatrixXd Vs = V * scale.cwiseInverse().asDiagonal();
  const Eigen::MatrixXd C = Vs.colPivHouseholderQr().solve(Y);
  for (int q = 0; q < du + ds + n; ++q) {
    Series sq(basis);
    for (int j = 0; j < nmono; ++j) sq[first + j] = C(j, q) / scale(j);
    res.w_c_fit.set_component(q, sq);
  }
  for (const auto& c : res.stencil)
    res.consistency = std::max(res.consistency, (res.w_c.eval(c) - res.w_c_fit.eval(c)).cwiseAbs().maxCoeff());
  if (res.consistency > opt.consistency_tol)
    throw NumericalError("build_wc: composed and fitted center graphs differ by " + std::to_string(res.consistency));
  return res;
}

}  // namespace cmsd
