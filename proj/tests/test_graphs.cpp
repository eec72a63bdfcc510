#include <catch_amalgamated.hpp>

#include "support.hpp"

using Catch::Approx;
using cmsd::GraphKind;
using cmsd::GraphMap;
using cmsd::Segment;
using cmsd::Series;

namespace {

double max_coeff(const GraphMap& w) { return w.coeffs().size() ? w.coeffs().cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TEST_CASE("linear models have zero graphs", "[graphs]") {
  cmsd::Pipeline p(test::hopf_linear());
  for (const GraphMap* w : {&p.center_stable(), &p.center_unstable(), &p.center_oracle()}) {
    CHECK(max_coeff(*w) == 0.0);
    CHECK(w->resubstitution_defect == 0.0);
  }
  CHECK(p.center_stable().domain_dim() == 2 + p.spectrum().d_s);
  CHECK(p.center_stable().codomain_dim() == 0 + 1);
  CHECK(p.center_unstable().domain_dim() == 2);
  CHECK(p.center_unstable().codomain_dim() == p.spectrum().d_s + 1);
}

TEST_CASE("planar ODE: the center graph is y = x²", "[graphs]") {
  cmsd::Pipeline p(test::planar(4));
  const auto& sd = p.spectrum();
  REQUIRE(sd.d_c == 1);
  REQUIRE(sd.d_u == 0);
  const GraphMap& w = p.center_oracle();
  CHECK(w.resubstitution_defect <= 1e-10);
  // the manifold is exactly quadratic, so degrees 3 and 4 vanish
  CHECK(w.degree_norm(3) <= 1e-12);
  CHECK(w.degree_norm(4) <= 1e-12);
  for (double c : {0.05, -0.03, 0.01}) {
    const Segment psi = cmsd::graph_point(sd, p.chart(), w, Eigen::VectorXd::Constant(1, c));
    // every point of the center manifold is a constant segment (x, x²)
    const double x = psi.at_zero()(0);
    for (int i = 0; i < psi.grid()->num_nodes(); ++i) {
      CHECK(psi.values()(i, 0) == Approx(x).margin(1e-13));
      CHECK(psi.values()(i, 1) == Approx(x * x).margin(1e-13));
    }
  }
}

TEST_CASE("resubstitution defects vanish through order k", "[graphs]") {
  for (const auto& cfg : {test::wright(32, 3), test::wright(16, 4), test::planar(5),
                          test::config({"-(pi/2)*x1 + x1*x2", "x2 + x1^2"}, "1", 1.0, 16),
                          test::config({"-(pi/2)*(x + x^2)"}, "1 + 0.2*x", 1.5)}) {
    cmsd::Pipeline p(cfg);
    CHECK(p.center_stable().resubstitution_defect <= 1e-10);
    CHECK(p.center_unstable().resubstitution_defect <= 1e-10);
    CHECK(p.center_oracle().resubstitution_defect <= 1e-10);
  }
}

TEST_CASE("evaluation and Jacobian", "[graphs]") {
  std::mt19937 rng(41);
  cmsd::Pipeline p(test::config({"-(pi/2)*x1 + x1*x2", "x2 + x1^2"}, "1", 1.0, 16));
  for (const GraphMap* w : {&p.center_unstable(), &p.center_oracle(), &p.center_stable()}) {
    const int d = w->domain_dim();
    CHECK(w->eval(Eigen::VectorXd::Zero(d)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(w->jacobian(Eigen::VectorXd::Zero(d)).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::VectorXd xi = test::random_vector(rng, d, 0.03);
    const Eigen::MatrixXd J = w->jacobian(xi);
    auto f = [&](const Eigen::VectorXd& v) { return w->eval(v); };
    for (int j = 0; j < std::min(d, 6); ++j) {
      const Eigen::VectorXd fd = test::central_difference(f, xi, j);
      CHECK((J.col(j) - fd).cwiseAbs().maxCoeff() <= 1e-7 * std::max(1.0, fd.cwiseAbs().maxCoeff()));
    }
    CHECK(w->in_box(xi));
    CHECK_FALSE(w->in_box(Eigen::VectorXd::Constant(d, 1.0)));
    CHECK_THROWS_AS(w->eval(Eigen::VectorXd::Zero(d + 1)), cmsd::ConfigError);
  }
}

TEST_CASE("the center graph lies inside the center-unstable graph", "[graphs]") {
  cmsd::Pipeline p(test::config({"-(pi/2)*x1 + x1*x2", "x2 + x1^2"}, "1", 1.0, 16));
  const auto& sd = p.spectrum();
  REQUIRE(sd.d_u == 1);
  const GraphMap& wc = p.center_oracle();   // c -> (u, s, z)
  const GraphMap& wcu = p.center_unstable();  // (c, u) -> (s, z)
  const int k = wc.order(), dc = sd.d_c;
  const auto B = cmsd::monomial_basis(dc, k);
  std::vector<Series> args;
  for (int i = 0; i < dc; ++i) args.push_back(Series::variable(B, i));
  args.push_back(Series(B, wc.coeffs().row(0).transpose()));
  for (int q = 0; q < wcu.codomain_dim(); ++q) {
    const Series composed = cmsd::compose(wcu.component(q), args);
    const Eigen::VectorXd diff = composed.coeffs() - wc.coeffs().row(1 + q).transpose();
    CHECK(diff.cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("off-graph distance decays like ε^{k+1}", "[graphs]") {
  cmsd::Pipeline p(test::wright());
  const auto& sd = p.spectrum();
  const GraphMap& w = p.center_oracle();
  cmsd::InvarianceOptions opt;
  opt.horizon = 2.0;
  opt.points = 4;
  std::vector<double> radii{1e-2, 3e-3, 1e-3}, defects;
  for (double eps : radii) {
    std::vector<Segment> starts;
    for (const auto& c : cmsd::radius_points(2, eps, opt.points)) starts.push_back(cmsd::graph_point(sd, p.chart(), w, c));
    defects.push_back(cmsd::invariance_defect(p.model(), sd, w, starts, "C2", eps, 1.0, opt).max_defect);
  }
  CHECK(cmsd::loglog_slope(radii, defects) >= w.order() + 0.5);
}

TEST_CASE("graph order is validated", "[graphs]") {
  cmsd::Pipeline p(test::wright());
  CHECK_THROWS_AS(cmsd::reduce(p.model(), p.spectrum(), 1), cmsd::ConfigError);
  CHECK_THROWS_AS(cmsd::reduce(p.model(), p.spectrum(), 6), cmsd::ConfigError);
}
