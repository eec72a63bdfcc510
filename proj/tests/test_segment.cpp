#include <catch_amalgamated.hpp>

#include "support.hpp"

using Catch::Approx;
using cmsd::Segment;

TEST_CASE("CGL nodes on [-1, 0] for N = 4", "[segment]") {
  const auto g = cmsd::make_grid(1.0, 1, 4);
  REQUIRE(g->num_nodes() == 5);
  // (cos(kπ/4) - 1)/2, independently of the half-angle form used by make_grid
  for (int k = 0; k <= 4; ++k) CHECK(g->nodes(k) == Approx((std::cos(k * M_PI / 4) - 1) / 2).margin(1e-15));
  CHECK(g->nodes(0) == 0.0);
  CHECK(g->nodes(1) == Approx(-0.1464466094067262).margin(1e-15));
  CHECK(g->nodes(2) == Approx(-0.5).margin(1e-15));
  CHECK(g->nodes(3) == Approx(-0.8535533905932737).margin(1e-15));
  CHECK(g->nodes(4) == -1.0);
}

TEST_CASE("grid scales with h and rejects bad input", "[segment]") {
  const auto g1 = cmsd::make_grid(1.0, 1, 4), g2 = cmsd::make_grid(2.0, 1, 4);
  for (int k = 0; k <= 4; ++k) CHECK(g2->nodes(k) == Approx(2 * g1->nodes(k)).margin(1e-15));
  CHECK_THROWS_AS(cmsd::make_grid(0.0, 1, 4), cmsd::ConfigError);
  CHECK_THROWS_AS(cmsd::make_grid(-1.0, 1, 4), cmsd::ConfigError);
  CHECK_THROWS_AS(cmsd::make_grid(1.0, 1, 3), cmsd::ConfigError);
  CHECK_THROWS_AS(cmsd::make_grid(1.0, 0, 8), cmsd::ConfigError);
}

TEST_CASE("nodes decrease strictly from 0 to -h", "[segment]") {
  for (int N : {4, 7, 16, 32, 64}) {
    const auto g = cmsd::make_grid(1.5, 2, N);
    REQUIRE(g->nodes.size() == N + 1);
    CHECK(g->nodes(0) == 0.0);
    CHECK(g->nodes(N) == -1.5);
    for (int k = 0; k < N; ++k) CHECK(g->nodes(k) > g->nodes(k + 1));
  }
}

TEST_CASE("interpolation reproduces polynomials", "[segment]") {
  const auto g = cmsd::make_grid(1.0, 1, 4);
  auto scalar = [&](std::function<double(double)> f) {
    return Segment::sample(g, [f](double t) { return Eigen::VectorXd::Constant(1, f(t)); });
  };
  CHECK(scalar([](double) { return 2.5; }).eval(-0.77)(0) == Approx(2.5).margin(1e-14));
  CHECK(scalar([](double t) { return t; }).eval(-0.3)(0) == Approx(-0.3).margin(1e-14));
  CHECK(scalar([](double t) { return t * t; }).eval(-0.5)(0) == Approx(0.25).margin(1e-14));
  CHECK_THROWS_AS(scalar([](double t) { return t; }).eval(0.1), cmsd::DomainError);
  CHECK_THROWS_AS(scalar([](double t) { return t; }).eval(-1.1), cmsd::DomainError);
}

TEST_CASE("evaluation at nodes is exact", "[segment]") {
  std::mt19937 rng(3);
  const auto g = cmsd::make_grid(1.3, 2, 12);
  const Segment s = Segment::from_vector(g, test::random_vector(rng, g->dim(), 1.0));
  for (int i = 0; i < g->num_nodes(); ++i) CHECK((s.eval(g->nodes(i)) - s.values().row(i).transpose()).norm() == 0.0);
}

TEST_CASE("differentiation", "[segment]") {
  const auto g = cmsd::make_grid(1.0, 1, 4);
  const Segment id = Segment::sample(g, [](double t) { return Eigen::VectorXd::Constant(1, t); });
  const Segment sq = Segment::sample(g, [](double t) { return Eigen::VectorXd::Constant(1, t * t); });
  const Segment c = Segment::sample(g, [](double) { return Eigen::VectorXd::Constant(1, 4.0); });
  for (int i = 0; i <= 4; ++i) {
    CHECK(id.differentiate().values()(i, 0) == Approx(1.0).margin(1e-13));
    CHECK(c.differentiate().values()(i, 0) == Approx(0.0).margin(1e-13));
    CHECK(sq.differentiate().values()(i, 0) == Approx(2 * g->nodes(i)).margin(1e-13));
  }
}

TEST_CASE("differentiation is exact on monomials of degree <= N", "[segment]") {
  for (int N : {8, 16}) {
    const auto g = cmsd::make_grid(2.0, 1, N);
    for (int p = 0; p <= N; ++p) {
      const Segment s = Segment::sample(g, [p](double t) { return Eigen::VectorXd::Constant(1, std::pow(t, p)); });
      const Segment d = s.differentiate();
      Eigen::VectorXd exact(N + 1);
      for (int i = 0; i <= N; ++i) exact(i) = p == 0 ? 0.0 : p * std::pow(g->nodes(i), p - 1);
      const double scale = std::max({1.0, exact.cwiseAbs().maxCoeff(), s.norm_C()});
      CHECK((d.values().col(0) - exact).cwiseAbs().maxCoeff() <= 1e-12 * scale);
    }
  }
}

TEST_CASE("norms", "[segment]") {
  const auto g = cmsd::make_grid(1.0, 1, 8);
  const Segment id = Segment::sample(g, [](double t) { return Eigen::VectorXd::Constant(1, t); });
  CHECK(id.norm_C() == Approx(1.0).margin(1e-15));
  CHECK(id.norm_C1() == Approx(2.0).margin(1e-12));
  const Segment z = Segment::zero(g);
  CHECK(z.norm_C() == 0.0);
  CHECK(z.norm_C1() == 0.0);
}

TEST_CASE("nodal sup-norm of sin(πθ) against a dense oracle", "[segment]") {
  const auto g = cmsd::make_grid(1.0, 1, 16);
  const Segment s = Segment::sample(g, [](double t) { return Eigen::VectorXd::Constant(1, std::sin(M_PI * t)); });
  double dense = 0.0;
  for (int i = 0; i <= 10000; ++i) dense = std::max(dense, std::abs(std::sin(-M_PI * i / 10000.0)));
  CHECK(dense == Approx(1.0).margin(1e-12));
  CHECK(s.norm_C() <= dense);
  CHECK(std::abs(s.norm_C() - dense) <= 1e-3);
}

TEST_CASE("linearity, norm ordering and triangle inequality", "[segment]") {
  std::mt19937 rng(11);
  const auto g = cmsd::make_grid(1.0, 2, 10);
  for (int trial = 0; trial < 20; ++trial) {
    const Segment a = test::random_segment(rng, g, 1.0), b = test::random_segment(rng, g, 2.0);
    const double alpha = 0.7, beta = -1.9, theta = -0.123 * (trial % 8);
    const Eigen::VectorXd lhs = (alpha * a + beta * b).eval(theta);
    const Eigen::VectorXd rhs = alpha * a.eval(theta) + beta * b.eval(theta);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-14 * (1 + rhs.cwiseAbs().maxCoeff()));
    CHECK(a.norm_C1() >= a.norm_C());
    CHECK(a.norm_C() > 0.0);
    CHECK((a + b).norm_C() <= a.norm_C() + b.norm_C() + 1e-15);
    CHECK((a + b).norm_C1() <= a.norm_C1() + b.norm_C1() + 1e-12);
  }
}

TEST_CASE("flattening is node-major and round-trips", "[segment]") {
  std::mt19937 rng(5);
  const auto g = cmsd::make_grid(1.0, 3, 6);
  const Eigen::VectorXd x = test::random_vector(rng, g->dim(), 1.0);
  const Segment s = Segment::from_vector(g, x);
  CHECK(s.values()(2, 1) == x(2 * 3 + 1));
  CHECK((s.as_vector() - x).norm() == 0.0);
  CHECK_THROWS_AS(Segment::from_vector(g, Eigen::VectorXd::Zero(5)), cmsd::ConfigError);
}
