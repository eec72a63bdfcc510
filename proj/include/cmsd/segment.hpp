#pragma once

// History spaces C([-h,0], R^n) and C^1([-h,0], R^n) represented by polynomial
// collocation on Chebyshev-Gauss-Lobatto nodes.
//
// Node ordering is fixed throughout the library: node 0 is θ = 0, node N is
// θ = -h, nodes strictly decreasing. A segment flattened to a vector is
// node-major: x[i*n + j] is component j at node i.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "cmsd/error.hpp"

namespace cmsd {

struct Grid {
  double h = 1.0;
  int n = 1;
  int N = 4;
  Eigen::VectorXd nodes;    // N+1 values, nodes(0) = 0, nodes(N) = -h
  Eigen::VectorXd weights;  // barycentric weights
  Eigen::MatrixXd D;        // scalar differentiation matrix, (N+1) x (N+1)

  int num_nodes() const { return N + 1; }
  /// Dimension of the flattened nodal vector, (N+1)·n.
  int dim() const { return (N + 1) * n; }

  /// Row r with r·v = p(θ) for the interpolant p of nodal values v.
  Eigen::RowVectorXd interpolation_row(double theta) const {
    check_theta(theta);
    const int m = num_nodes();
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(m);
    for (int j = 0; j < m; ++j) {
      if (theta == nodes(j)) {
        row(j) = 1.0;
        return row;
      }
    }
    double denom = 0.0;
    for (int j = 0; j < m; ++j) {
      row(j) = weights(j) / (theta - nodes(j));
      denom += row(j);
    }
    return row / denom;
  }

  /// Row evaluating the order-th derivative of the interpolant at θ.
  Eigen::RowVectorXd derivative_row(double theta, int order) const {
    Eigen::RowVectorXd row = interpolation_row(theta);
    for (int k = 0; k < order; ++k) row = row * D;
    return row;
  }

  /// Expands a scalar row acting on node values to an n x dim() block acting
  /// on the flattened vector.
  Eigen::MatrixXd expand_row(const Eigen::RowVectorXd& row) const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, dim());
    for (int i = 0; i < num_nodes(); ++i)
      for (int j = 0; j < n; ++j) out(j, i * n + j) = row(i);
    return out;
  }

  /// D ⊗ I_n acting on flattened vectors.
  Eigen::MatrixXd full_differentiation() const {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim(), dim());
    for (int i = 0; i < num_nodes(); ++i)
      for (int k = 0; k < num_nodes(); ++k)
        for (int j = 0; j < n; ++j) out(i * n + j, k * n + j) = D(i, k);
    return out;
  }

  void check_theta(double& theta) const {
    const double slack = 1e-12 * h;
    if (!(theta <= slack && theta >= -h - slack))
      throw DomainError("θ = " + std::to_string(theta) + " outside [-h, 0]");
    theta = std::clamp(theta, -h, 0.0);
  }
};

/// Chebyshev-Gauss-Lobatto grid on [-h, 0] with barycentric weights and the
/// spectral differentiation matrix.
inline std::shared_ptr<const Grid> make_grid(double h, int n, int N) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("grid: horizon h must be positive");
  if (n < 1) throw ConfigError("grid: state dimension n must be >= 1");
  if (N < 4) throw ConfigError("grid: collocation degree N must be >= 4");

  auto g = std::make_shared<Grid>();
  g->h = h;
  g->n = n;
  g->N = N;
  const int m = N + 1;
  const double pi = std::numbers::pi;
  g->nodes.resize(m);
  g->weights.resize(m);
  for (int k = 0; k < m; ++k) {
    // (h/2)(cos(kπ/N) - 1) written without cancellation near θ = 0
    const double s = std::sin(k * pi / (2.0 * N));
    g->nodes(k) = -h * s * s;
    const double delta = (k == 0 || k == N) ? 0.5 : 1.0;
    g->weights(k) = (k % 2 == 0 ? 1.0 : -1.0) * delta;
  }
  g->nodes(0) = 0.0;
  g->nodes(N) = -h;

  g->D = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    double row_sum = 0.0;
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;
      // θ_i - θ_j = -h sin((i+j)π/2N) sin((i-j)π/2N)
      const double diff = -h * std::sin((i + j) * pi / (2.0 * N)) * std::sin((i - j) * pi / (2.0 * N));
      const double v = (g->weights(j) / g->weights(i)) / diff;
      g->D(i, j) = v;
      row_sum += v;
    }
    g->D(i, i) = -row_sum;
  }
  return g;
}

/// A discretized history segment: nodal values of a function [-h,0] → R^n.
class Segment {
 public:
  using GridPtr = std::shared_ptr<const Grid>;

  Segment() = default;
  Segment(GridPtr grid, Eigen::MatrixXd values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) throw ConfigError("segment: null grid");
    if (values_.rows() != grid_->num_nodes() || values_.cols() != grid_->n)
      throw ConfigError("segment: value array must be (N+1) x n");
  }

  static Segment zero(GridPtr grid) {
    const int m = grid->num_nodes(), n = grid->n;
    return Segment(std::move(grid), Eigen::MatrixXd::Zero(m, n));
  }

  /// Samples θ ↦ fn(θ) ∈ R^n at the nodes.
  static Segment sample(GridPtr grid, const std::function<Eigen::VectorXd(double)>& fn) {
    Eigen::MatrixXd v(grid->num_nodes(), grid->n);
    for (int i = 0; i < grid->num_nodes(); ++i) v.row(i) = fn(grid->nodes(i)).transpose();
    return Segment(std::move(grid), std::move(v));
  }

  static Segment from_vector(GridPtr grid, const Eigen::VectorXd& x) {
    if (x.size() != grid->dim()) throw ConfigError("segment: flattened vector has wrong length");
    Eigen::MatrixXd v(grid->num_nodes(), grid->n);
    for (int i = 0; i < grid->num_nodes(); ++i)
      for (int j = 0; j < grid->n; ++j) v(i, j) = x(i * grid->n + j);
    return Segment(std::move(grid), std::move(v));
  }

  Eigen::VectorXd as_vector() const {
    Eigen::VectorXd x(grid_->dim());
    for (int i = 0; i < grid_->num_nodes(); ++i)
      for (int j = 0; j < grid_->n; ++j) x(i * grid_->n + j) = values_(i, j);
    return x;
  }

  const GridPtr& grid() const { return grid_; }
  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::MatrixXd& values() { return values_; }

  Eigen::VectorXd eval(double theta) const { return (grid_->interpolation_row(theta) * values_).transpose(); }

  Eigen::VectorXd eval_derivative(double theta, int order = 1) const {
    return (grid_->derivative_row(theta, order) * values_).transpose();
  }

  /// Value at θ = 0 (node 0).
  Eigen::VectorXd at_zero() const { return values_.row(0).transpose(); }

  Segment differentiate() const { return Segment(grid_, grid_->D * values_); }

  /// Max over nodes of the max-norm on R^n: a nodal discretization of the sup-norm.
  double norm_C() const { return values_.size() == 0 ? 0.0 : values_.cwiseAbs().maxCoeff(); }
  double norm_C1() const { return norm_C() + differentiate().norm_C(); }

  bool all_finite() const { return values_.allFinite(); }

  Segment& operator+=(const Segment& o) {
    check_same(o);
    values_ += o.values_;
    return *this;
  }
  Segment& operator-=(const Segment& o) {
    check_same(o);
    values_ -= o.values_;
    return *this;
  }
  Segment& operator*=(double a) {
    values_ *= a;
    return *this;
  }
  friend Segment operator+(Segment a, const Segment& b) { return a += b; }
  friend Segment operator-(Segment a, const Segment& b) { return a -= b; }
  friend Segment operator*(double a, Segment s) { return s *= a; }
  friend Segment operator*(Segment s, double a) { return s *= a; }

 private:
  void check_same(const Segment& o) const {
    if (grid_ != o.grid_ && (grid_->N != o.grid_->N || grid_->n != o.grid_->n || grid_->h != o.grid_->h))
      throw ConfigError("segment: grids differ");
  }

  GridPtr grid_;
  Eigen::MatrixXd values_;
};

}  // namespace cmsd
