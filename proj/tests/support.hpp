#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "cmsd/cmsd.hpp"

namespace test {

inline cmsd::RunConfig config(std::vector<std::string> g, std::string r = "1", double h = 1.0, int N = 32,
                              int order = 3) {
  cmsd::RunConfig c;
  c.model.g = std::move(g);
  c.model.r = std::move(r);
  c.model.h = h;
  c.N = N;
  c.order = order;
  return c;
}

/// x' = -(π/2)(x(t-1) + x(t-1)²): a Hopf point with dim C_c = 2.
inline cmsd::RunConfig wright(int N = 32, int order = 3) { return config({"-(pi/2)*(x + x^2)"}, "1", 1.0, N, order); }

/// x' = -x(t-1): no center directions.
inline cmsd::RunConfig linear_decay() {
  auto c = config({"-x"});
  c.require_center = false;
  return c;
}

/// x' = -(π/2) x(t-1): linear at the Hopf point.
inline cmsd::RunConfig hopf_linear() { return config({"-(pi/2)*x"}); }

/// ODE ẋ = 0, ẏ = -y + x², center manifold y = x².
inline cmsd::RunConfig planar(int order = 4) { return config({"0", "-x2 + x1^2"}, "0", 1.0, 16, order); }

/// Central difference of a vector-valued map along one coordinate.
inline Eigen::VectorXd central_difference(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                          const Eigen::VectorXd& x, int i, double eps = 1e-5) {
  Eigen::VectorXd a = x, b = x;
  a(i) += eps;
  b(i) -= eps;
  return (f(a) - f(b)) / (2 * eps);
}

inline Eigen::VectorXd random_vector(std::mt19937& rng, int d, double scale) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v(i) = scale * u(rng);
  return v;
}

/// Smooth random segment Σ a_j cos(jθ + b_j) per component, amplitude `scale`.
inline cmsd::Segment random_segment(std::mt19937& rng, const cmsd::GridPtr& grid, double scale) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = grid->n;
  Eigen::MatrixXd a(n, 3), b(n, 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 3; ++j) {
      a(i, j) = u(rng);
      b(i, j) = 3 * u(rng);
    }
  return cmsd::Segment::sample(grid, [=](double t) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < 3; ++j) v(i) += scale * a(i, j) * std::cos(j * t + b(i, j)) / 3.0;
    return v;
  });
}

}  // namespace test
