#pragma once

// Right-hand sides f(φ) = g(φ(-r(φ(0)))) of state-dependent delay equations.

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cmsd/error.hpp"
#include "cmsd/expression.hpp"
#include "cmsd/segment.hpp"
#include "cmsd/series.hpp"

namespace cmsd {

/// Taylor expansion of the discretized f around 0, written through a small
/// set of linear "features" of the nodal vector: x(0) and the derivatives
/// X^{(j)}(-r(0)), j = 0..k-1, of the interpolant at the linearized delay.
struct TaylorF {
  int n = 0;
  int order = 0;
  Eigen::MatrixXd features;  // n(k+1) x dim, feature values = features · x
  std::vector<Series> f;     // n polynomials over the features, degree <= k

  /// Full truncated f at a nodal vector.
  Eigen::VectorXd eval(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd v = features * x;
    Eigen::VectorXd out(n);
    for (int i = 0; i < n; ++i) out(i) = f[i].evaluate({v.data(), static_cast<std::size_t>(v.size())});
    return out;
  }

  /// The components of degree 2..k only.
  std::vector<Series> nonlinear() const {
    std::vector<Series> out;
    for (const auto& s : f) out.push_back(s.degree_range(2, order));
    return out;
  }
};

class DelayModel {
 public:
  DelayModel(std::vector<std::string> g, std::string r, double h, double validity_radius = 0.1)
      : h_(h), radius_(validity_radius) {
    if (g.empty()) throw ConfigError("model: g needs at least one component");
    if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("model: h must be positive");
    if (!(validity_radius > 0.0)) throw ConfigError("model: validity radius must be positive");
    n_ = static_cast<int>(g.size());
    for (const auto& s : g) g_.push_back(Expression::parse(s, n_));
    r_ = Expression::parse(r, n_);

    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n_);
    const Eigen::VectorXd g0 = g_eval(zero);
    if (g0.cwiseAbs().maxCoeff() > 1e-14) throw ConfigError("model: g(0) must vanish");
    r0_ = r_eval(zero);
    check_delay_range();
  }

  int n() const { return n_; }
  double h() const { return h_; }
  double r0() const { return r0_; }
  double validity_radius() const { return radius_; }
  const std::vector<Expression>& g_expressions() const { return g_; }
  const Expression& r_expression() const { return r_; }

  Eigen::VectorXd g_eval(const Eigen::VectorXd& xi) const {
    Eigen::VectorXd out(n_);
    for (int i = 0; i < n_; ++i) out(i) = g_[i]({xi.data(), static_cast<std::size_t>(n_)});
    return out;
  }

  double r_eval(const Eigen::VectorXd& xi) const { return r_({xi.data(), static_cast<std::size_t>(n_)}); }

  /// Jacobian Dg(ξ).
  Eigen::MatrixXd dg(const Eigen::VectorXd& xi) const {
    const auto vars = jet_vars(xi);
    Eigen::MatrixXd J(n_, n_);
    for (int i = 0; i < n_; ++i) {
      const Series s = g_[i](std::span<const Series>(vars));
      for (int j = 0; j < n_; ++j) J(i, j) = s[1 + j];
    }
    return J;
  }

  /// Gradient Dr(ξ) as a row.
  Eigen::RowVectorXd dr(const Eigen::VectorXd& xi) const {
    const auto vars = jet_vars(xi);
    const Series s = r_(std::span<const Series>(vars));
    Eigen::RowVectorXd row(n_);
    for (int j = 0; j < n_; ++j) row(j) = s[1 + j];
    return row;
  }

  /// Delay at the segment's current value, checked against [0, h].
  double delay(const Segment& phi) const {
    const double rho = r_eval(phi.at_zero());
    check_rho(rho);
    return rho;
  }

  void check_rho(double rho) const {
    if (!(rho >= -1e-12 * h_ && rho <= h_ * (1 + 1e-12)))
      throw DomainError("delay r = " + std::to_string(rho) + " outside [0, h]");
  }

  /// f(φ) = g(φ(-r(φ(0)))).
  Eigen::VectorXd f_eval(const Segment& phi) const {
    check_grid(phi);
    const double rho = delay(phi);
    return g_eval(phi.eval(-std::min(rho, h_)));
  }

  /// Df(φ)ψ = Dg(a)[ψ(-ρ) - φ'(-ρ) Dr(φ(0)) ψ(0)], ρ = r(φ(0)), a = φ(-ρ).
  Eigen::VectorXd df_eval(const Segment& phi, const Segment& psi) const {
    check_grid(phi);
    check_grid(psi);
    const double rho = std::min(delay(phi), h_);
    const Eigen::VectorXd a = phi.eval(-rho);
    const double drpsi = dr(phi.at_zero()).dot(psi.at_zero());
    return dg(a) * (psi.eval(-rho) - phi.eval_derivative(-rho) * drpsi);
  }

  /// D_e f(0)ψ = Dg(0) ψ(-r(0)); needs only values of ψ.
  Eigen::VectorXd d_e_f_zero(const Segment& psi) const {
    check_grid(psi);
    return dg(Eigen::VectorXd::Zero(n_)) * psi.eval(-r0_);
  }

  /// Row block (n x dim) of D_e f(0) acting on flattened nodal vectors.
  Eigen::MatrixXd d_e_f_zero_matrix(const Grid& grid) const {
    return dg(Eigen::VectorXd::Zero(n_)) * grid.expand_row(grid.interpolation_row(-r0_));
  }

  /// Taylor expansion of the discretized f through total degree k.
  TaylorF taylor_f(const Grid& grid, int k) const {
    if (k < 1 || k > 5) throw ConfigError("taylor_f: order must be in [1, 5]");
    if (grid.n != n_ || grid.h != h_) throw ConfigError("taylor_f: grid does not match the model");
    TaylorF t;
    t.n = n_;
    t.order = k;
    const int F = n_ * (k + 1);
    t.features.resize(F, grid.dim());
    t.features.topRows(n_) = grid.expand_row(grid.interpolation_row(0.0));
    for (int j = 0; j < k; ++j) t.features.middleRows(n_ * (1 + j), n_) = grid.expand_row(grid.derivative_row(-r0_, j));

    const BasisPtr basis = monomial_basis(F, k);
    std::vector<Series> x0;
    for (int i = 0; i < n_; ++i) x0.push_back(Series::variable(basis, i));
    const Series delta = r_(std::span<const Series>(x0)) - r0_;

    // X(-r0 - δ) = Σ_j X^{(j)}(-r0) (-δ)^j / j!
    std::vector<Series> arg(n_, Series(basis));
    Series power = Series::constant(basis, 1.0);
    double fact = 1.0;
    for (int j = 0; j < k; ++j) {
      if (j > 0) {
        power = power * (-delta);
        fact *= j;
      }
      for (int i = 0; i < n_; ++i) arg[i] += (1.0 / fact) * (power * Series::variable(basis, n_ * (1 + j) + i));
    }
    for (int i = 0; i < n_; ++i) {
      Series fi = g_[i](std::span<const Series>(arg));
      fi[0] = 0.0;
      t.f.push_back(std::move(fi));
    }
    return t;
  }

  /// The linear model v' = Dg(0) v(t - r(0)).
  DelayModel linearized() const {
    const Eigen::MatrixXd J = dg(Eigen::VectorXd::Zero(n_));
    std::vector<std::string> g;
    char buf[64];
    for (int i = 0; i < n_; ++i) {
      std::string s = "0";
      for (int j = 0; j < n_; ++j) {
        if (J(i, j) == 0.0) continue;
        std::snprintf(buf, sizeof buf, " + (%.17g)*x%d", J(i, j), j + 1);
        s += buf;
      }
      g.push_back(s);
    }
    std::snprintf(buf, sizeof buf, "%.17g", r0_);
    return DelayModel(g, buf, h_, radius_);
  }

 private:
  std::vector<Series> jet_vars(const Eigen::VectorXd& xi) const {
    const BasisPtr basis = monomial_basis(n_, 1);
    std::vector<Series> vars;
    for (int i = 0; i < n_; ++i) vars.push_back(Series::variable(basis, i, xi(i)));
    return vars;
  }

  void check_grid(const Segment& s) const {
    if (s.grid()->n != n_) throw ConfigError("segment dimension does not match the model");
    if (std::abs(s.grid()->h - h_) > 1e-14 * h_) throw ConfigError("segment horizon does not match the model");
  }

  void check_delay_range() const {
    // Sample the box [-radius, radius]^n: full 5-point tensor grid for small n,
    // otherwise the axes and the two diagonals.
    std::vector<Eigen::VectorXd> pts;
    const double levels[5] = {-1.0, -0.5, 0.0, 0.5, 1.0};
    if (n_ <= 4) {
      const int total = static_cast<int>(std::pow(5, n_));
      for (int idx = 0; idx < total; ++idx) {
        Eigen::VectorXd p(n_);
        int rem = idx;
        for (int i = 0; i < n_; ++i) {
          p(i) = radius_ * levels[rem % 5];
          rem /= 5;
        }
        pts.push_back(p);
      }
    } else {
      for (int i = 0; i < n_; ++i)
        for (double l : levels) {
          Eigen::VectorXd p = Eigen::VectorXd::Zero(n_);
          p(i) = radius_ * l;
          pts.push_back(p);
        }
      pts.push_back(Eigen::VectorXd::Constant(n_, radius_));
      pts.push_back(Eigen::VectorXd::Constant(n_, -radius_));
    }
    for (const auto& p : pts) {
      const double rho = r_eval(p);
      if (!(rho >= 0.0 && rho <= h_))
        throw ConfigError("model: r leaves [0, h] inside the validity box (r = " + std::to_string(rho) + ")");
    }
  }

  int n_ = 1;
  double h_ = 1.0;
  double radius_ = 0.1;
  double r0_ = 0.0;
  std::vector<Expression> g_;
  Expression r_;
};

}  // namespace cmsd
