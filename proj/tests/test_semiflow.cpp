#include <catch_amalgamated.hpp>

#include "support.hpp"

using Catch::Approx;
using cmsd::DelayModel;
using cmsd::Segment;
using cplx = std::complex<double>;

namespace {

Segment scalar_segment(const cmsd::GridPtr& g, std::function<double(double)> f) {
  return Segment::sample(g, [f](double t) { return Eigen::VectorXd::Constant(1, f(t)); });
}

/// Root of λ + e^{-λ} = 0 near the start, by scalar Newton.
cplx decay_root(cplx lambda) {
  for (int i = 0; i < 50; ++i) lambda -= (lambda + std::exp(-lambda)) / (1.0 - std::exp(-lambda));
  return lambda;
}

}  // namespace

TEST_CASE("X_f defect", "[semiflow]") {
  const auto g = cmsd::make_grid(1.0, 1, 32);
  const DelayModel m({"-x"}, "1", 1.0);
  CHECK(cmsd::xf_defect(m, Segment::zero(g)) == 0.0);
  CHECK(cmsd::xf_defect(m, scalar_segment(g, [](double) { return 1.0; })) == Approx(1.0).margin(1e-12));
  const cplx lambda = decay_root({-0.3, 1.3});
  REQUIRE(std::abs(lambda + std::exp(-lambda)) <= 1e-15);
  const Segment eig = scalar_segment(g, [&](double t) { return std::exp(lambda * t).real(); });
  CHECK(cmsd::xf_defect(m, eig) <= 1e-10);
}

TEST_CASE("projection onto X_f", "[semiflow]") {
  std::mt19937 rng(17);
  cmsd::Pipeline p(test::wright());
  const auto& sd = p.spectrum();
  const auto& m = p.model();
  const auto& g = p.grid();

  SECTION("points of X_f are fixed") {
    const Segment psi = cmsd::lift(p.system(), p.chart(), Eigen::Vector2d(3e-3, -1e-3));
    REQUIRE(cmsd::xf_defect(m, psi) <= 1e-12);
    CHECK((cmsd::project_to_xf(m, psi, sd.basis_z).as_vector() - psi.as_vector()).norm() == 0.0);
  }
  SECTION("small random segments") {
    for (int trial = 0; trial < 5; ++trial) {
      const Segment phi = test::random_segment(rng, g, 1e-2);
      const double before = cmsd::xf_defect(m, phi);
      const Segment out = cmsd::project_to_xf(m, phi, sd.basis_z);
      CHECK(cmsd::xf_defect(m, out) <= 1e-12);
      // the correction lies in Z and has the size of the initial defect
      const Eigen::VectorXd diff = out.as_vector() - phi.as_vector();
      const Eigen::VectorXd z = sd.basis_z.colPivHouseholderQr().solve(diff);
      CHECK((sd.basis_z * z - diff).norm() <= 1e-12);
      CHECK(z.norm() <= 10 * before);
    }
  }
  SECTION("linear model: the linear projection along Z") {
    cmsd::Pipeline q(test::hopf_linear());
    const auto& s2 = q.spectrum();
    const Segment phi = test::random_segment(rng, q.grid(), 1.0);
    const Segment out = cmsd::project_to_xf(q.model(), phi, s2.basis_z);
    const Eigen::VectorXd lin = q.chart().P * phi.as_vector();
    CHECK((out.as_vector() - lin).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("Hopf-point linear equation keeps cos(πt/2)", "[semiflow]") {
  const auto g = cmsd::make_grid(1.0, 1, 32);
  const DelayModel m({"-(pi/2)*x"}, "1", 1.0);
  const Segment phi = scalar_segment(g, [](double t) { return std::cos(M_PI * t / 2); });
  cmsd::IntegrateOptions opt;
  opt.dt = 1e-3;
  opt.output_dt = 0.1;
  const auto tr = cmsd::integrate(m, phi, 4.0, opt);
  CHECK(tr.times.size() == 41);
  CHECK(tr.t_plus == 4.0);
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    double sup = 0.0;
    for (int k = 0; k < g->num_nodes(); ++k) sup = std::max(sup, std::abs(std::cos(M_PI * (tr.times[i] + g->nodes(k)) / 2)));
    CHECK(tr.segments[i].norm_C() == Approx(sup).margin(1e-10));
    CHECK(tr.segments[i].at_zero()(0) == Approx(std::cos(M_PI * tr.times[i] / 2)).margin(1e-10));
    CHECK(tr.xf_defects[i] <= 1e-8);
  }
}

TEST_CASE("solutions of x' = -x(t-1) decay", "[semiflow]") {
  const auto g = cmsd::make_grid(1.0, 1, 32);
  const DelayModel m({"-x"}, "1", 1.0);
  const Segment phi = scalar_segment(g, [](double) { return 1e-2; });
  CHECK(cmsd::flow_map(m, phi, 4.0).norm_C() < phi.norm_C());
}

TEST_CASE("flow map at zero time and the semigroup property", "[semiflow]") {
  std::mt19937 rng(23);
  cmsd::Pipeline p(test::wright());
  const auto& m = p.model();
  const Segment zero_t = cmsd::flow_map(m, Segment::zero(p.grid()), 0.0);
  CHECK(zero_t.norm_C() == 0.0);
  for (int trial = 0; trial < 3; ++trial) {
    const Segment phi = cmsd::project_to_xf(m, test::random_segment(rng, p.grid(), 1e-2), p.spectrum().basis_z);
    CHECK((cmsd::flow_map(m, phi, 0.0).as_vector() - phi.as_vector()).norm() == 0.0);
    for (double s : {1.0, 0.7}) {
      const double t = 1.0;
      const Segment a = cmsd::flow_map(m, phi, s + t);
      const Segment b = cmsd::flow_map(m, cmsd::flow_map(m, phi, t), s);
      CHECK((a - b).norm_C() <= 1e-6);
    }
  }
}

TEST_CASE("trajectories on the center manifold overlap consistently", "[semiflow]") {
  cmsd::Pipeline p(test::config({"-(pi/2)*(x + x^2)"}, "1 + 0.2*x", 1.5));
  const Segment phi = cmsd::lift(p.system(), p.chart(), Eigen::Vector2d(1e-2, 0.0));
  cmsd::IntegrateOptions opt;
  opt.output_dt = 0.25;
  const auto tr = cmsd::integrate(p.model(), phi, 4.0, opt);
  CHECK(tr.max_xf_defect() <= 1e-8);
  for (std::size_t i = 1; i < tr.times.size(); ++i) {
    const double shift = tr.times[i] - tr.times[i - 1];
    for (double th : {0.0, -0.3, -0.9, -1.5 + shift}) {
      if (th - shift < -1.5) continue;
      const double lhs = tr.segments[i].eval(th - shift)(0), rhs = tr.segments[i - 1].eval(th)(0);
      CHECK(std::abs(lhs - rhs) <= 1e-8);
    }
  }
}

TEST_CASE("fourth-order convergence in the step size", "[semiflow]") {
  const auto g = cmsd::make_grid(1.0, 1, 32);
  const DelayModel m({"-(pi/2)*x + x^2"}, "1", 1.0);
  const Segment phi = scalar_segment(g, [](double t) { return 0.1 * std::cos(M_PI * t / 2); });
  auto end_value = [&](double dt) { return cmsd::flow_map(m, phi, 2.0, dt).at_zero()(0); };
  const double ref = end_value(1e-3 / 8);
  const double e1 = std::abs(end_value(4e-2) - ref), e2 = std::abs(end_value(2e-2) - ref);
  CHECK(e1 / e2 >= 8.0);
}

TEST_CASE("blow-up is reported with the computed part", "[semiflow]") {
  const auto g = cmsd::make_grid(1.0, 1, 8);
  const DelayModel m({"x^2"}, "0", 1.0, 1.0);
  const Segment phi = scalar_segment(g, [](double) { return 1.0; });
  try {
    cmsd::integrate(m, phi, 2.0);
    FAIL("no blow-up");
  } catch (const cmsd::BlowUpError& e) {
    CHECK(e.partial().t_plus <= 1.05);
    CHECK(e.partial().t_plus >= 0.9);
  }
  CHECK_THROWS_AS(cmsd::integrate(m, phi, 0.0), cmsd::ConfigError);
  CHECK_THROWS_AS(cmsd::flow_map(m, phi, -1.0), cmsd::DomainError);
}
