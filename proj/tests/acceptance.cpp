// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>

#include "cmsd/cmsd.hpp"

namespace {

using cmsd::Segment;
using Clock = std::chrono::steady_clock;

cmsd::RunConfig config(std::vector<std::string> g, std::string r = "1", int N = 32, int order = 3) {
  cmsd::RunConfig c;
  c.model.g = std::move(g);
  c.model.r = std::move(r);
  c.N = N;
  c.order = order;
  return c;
}

cmsd::RunConfig wright() { return config({"-(pi/2)*(x + x^2)"}); }

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

std::string sci(double v) { return cmsd::sci(v); }

int failures = 0;

void report(int id, bool pass, const std::string& what) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

void run(int id, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, false, std::string("exception: ") + e.what());
  }
}

Eigen::VectorXd central_difference(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, int i, double eps = 1e-5) {
  Eigen::VectorXd a = x, b = x;
  a(i) += eps;
  b(i) -= eps;
  return (f(a) - f(b)) / (2 * eps);
}

void linear_nullity() {
  const auto t0 = Clock::now();
  auto cfg = config({"-x"});
  cfg.require_center = false;
  cmsd::Pipeline p(cfg);
  double worst = std::max(max_abs(p.center_stable().coeffs()), max_abs(p.center_unstable().coeffs()));
  const auto& ir = p.intersection();
  worst = std::max(worst, max_abs(ir.w_c.coeffs()));
  for (const auto& s : ir.g_poly) worst = std::max(worst, max_abs(s.coeffs()));
  const double secs = seconds_since(t0);
  report(1, worst <= 1e-12 && secs < 5.0,
         "x' = -x(t-1): max coefficient " + sci(worst) + ", runtime " + sci(secs) + " s");
}

void spectral_benchmark() {
  cmsd::Pipeline p(config({"-(pi/2)*x"}));
  const auto& sd = p.spectrum();
  double root_err = 1.0;
  int centers = 0;
  double err_plus = 1.0, err_minus = 1.0;
  for (const auto& r : sd.roots) {
    if (!r.retained || r.cls != cmsd::RootClass::center) continue;
    ++centers;
    err_plus = std::min(err_plus, std::abs(r.value - cmsd::cplx(0, std::numbers::pi / 2)));
    err_minus = std::min(err_minus, std::abs(r.value - cmsd::cplx(0, -std::numbers::pi / 2)));
  }
  root_err = std::max(err_plus, err_minus);
  const int M = sd.dim();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(M, M);
  const std::vector<const Eigen::MatrixXd*> P{&sd.proj_c, &sd.proj_u, &sd.proj_Ys, &sd.proj_Z};
  double proj = max_abs(sd.proj_c + sd.proj_u + sd.proj_Ys + sd.proj_Z - I);
  for (std::size_t i = 0; i < P.size(); ++i)
    for (std::size_t j = 0; j < P.size(); ++j) {
      const Eigen::MatrixXd target = i == j ? *P[i] : Eigen::MatrixXd::Zero(M, M);
      proj = std::max(proj, max_abs(*P[i] * *P[j] - target));
    }
  const bool pass = centers == 2 && root_err <= 1e-8 && sd.d_c == 2 && sd.d_u == 0 && proj <= 1e-10;
  report(2, pass,
         "x' = -(pi/2)x(t-1): " + std::to_string(centers) + " center roots, |lambda -+ i pi/2| " + sci(root_err) +
             ", dim C_c " + std::to_string(sd.d_c) + ", dim C_u " + std::to_string(sd.d_u) + ", projection residual " +
             sci(proj));
}

void implicit_anchors() {
  cmsd::Pipeline p(wright());
  const auto& sys = p.system();
  const Eigen::VectorXd c0 = Eigen::VectorXd::Zero(sys.d_c), u0 = Eigen::VectorXd::Zero(sys.d_u),
                        s0 = Eigen::VectorXd::Zero(sys.d_s);
  const double g0 = max_abs(cmsd::G_eval(sys, c0, u0, s0));
  const int m = sys.d_us();
  const double j23 = max_abs(cmsd::G_jacobian_23(sys, c0, u0, s0) - Eigen::MatrixXd::Identity(m, m));
  auto g = [&](const Eigen::VectorXd& c) {
    const auto sol = cmsd::solve_g(sys, c);
    Eigen::VectorXd v(m);
    v << sol.u, sol.s;
    return v;
  };
  auto wc = [&](const Eigen::VectorXd& c) { return cmsd::wc_point(sys, c, cmsd::solve_g(sys, c)); };
  Eigen::MatrixXd Dg(m, sys.d_c), Dwc(p.center_oracle().codomain_dim(), sys.d_c);
  for (int j = 0; j < sys.d_c; ++j) {
    Dg.col(j) = central_difference(g, c0, j);
    Dwc.col(j) = central_difference(wc, c0, j);
  }
  const double ndg = Dg.norm(), ndwc = Dwc.norm();
  report(3, g0 == 0.0 && j23 <= 1e-12 && ndg <= 1e-6 && ndwc <= 1e-6,
         "|G(0)| " + sci(g0) + ", |D23 G(0) - I| " + sci(j23) + ", |Dg(0)| " + sci(ndg) + ", |Dw_c(0)| " + sci(ndwc));
}

void oracle_equivalence() {
  struct Case {
    const char* name;
    cmsd::RunConfig cfg;
  };
  const Case cases[] = {{"planar ODE", config({"0", "-x2 + x1^2"}, "0", 16)}, {"Wright k=3", wright()}};
  bool pass = true;
  std::string what;
  for (const auto& c : cases) {
    const auto t0 = Clock::now();
    cmsd::Pipeline p(c.cfg);
    const double dev = p.oracle_deviation();
    const double secs = seconds_since(t0);
    pass = pass && dev <= 1e-8 && secs < 60.0;
    what += std::string(what.empty() ? "" : "; ") + c.name + ": |w_c - oracle| " + sci(dev) + " in " + sci(secs) + " s";
  }
  report(4, pass, what);
}

void wright_checks() {
  cmsd::Pipeline p(wright());
  const auto& sys = p.system();
  const auto& ir = p.intersection();

  run(5, [&] {
    const auto r = cmsd::check_representations(sys, ir.stencil, 1e-8);
    report(5, r.pass && ir.stencil.size() == 50,
           std::to_string(ir.stencil.size()) + "-point stencil, max route difference " + sci(r.max_defect));
  });

  run(6, [&] {
    const auto r = cmsd::check_tangency(sys, {1e-1, 1e-2, 1e-3, 1e-4}, 1.9);
    report(6, r.pass, r.note);
  });

  run(7, [&] {
    cmsd::InvarianceOptions io;
    io.horizon = 5.0;
    const auto a = cmsd::check_positive_invariance(p.model(), sys, p.chart(), ir.w_c, 1e-2, 1e-7, io);
    const auto b = cmsd::check_positive_invariance(p.model(), sys, p.chart(), ir.w_c, 3e-3, 1e-7, io);
    const double shrink = a.max_defect / b.max_defect;
    report(7, a.max_defect <= 1e-7 && shrink >= 30.0,
           "max defect " + sci(a.max_defect) + " at 1e-2, " + sci(b.max_defect) + " at 3e-3, shrink " + sci(shrink) +
               (a.note.empty() ? "" : ", " + a.note));
  });

  run(8, [&] {
    const auto r = cmsd::check_subset(sys, p.chart(), ir.stencil, 1e-8);
    report(8, r.pass, "max graph-equation residual " + sci(r.max_defect) + " over " +
                          std::to_string(ir.stencil.size()) + " lifted points");
  });
}

void integrator_order() {
  // x' = -(pi/2) x(t-1) has the exact solution cos(pi t/2).
  const double w = std::numbers::pi / 2;
  const auto grid = cmsd::make_grid(1.0, 1, 32);
  const cmsd::DelayModel lin({"-(pi/2)*x"}, "1", 1.0);
  const Segment phi = Segment::sample(grid, [&](double t) { return Eigen::VectorXd::Constant(1, std::cos(w * t)); });
  const double T = 4.5;
  auto err = [&](double dt) { return std::abs(cmsd::flow_map(lin, phi, T, dt).at_zero()(0) - std::cos(w * T)); };
  const double e1 = err(0.04), e2 = err(0.02);
  const double ratio = e1 / e2;

  cmsd::Pipeline p(wright());
  const Segment psi = cmsd::lift(p.system(), p.chart(), Eigen::Vector2d(1e-2, 0.0));
  double semigroup = 0.0;
  for (double s : {1.0, 0.7}) {
    const Segment a = cmsd::flow_map(p.model(), psi, 1.0 + s);
    const Segment b = cmsd::flow_map(p.model(), cmsd::flow_map(p.model(), psi, 1.0), s);
    semigroup = std::max(semigroup, (a - b).norm_C());
  }
  report(9, ratio >= 8.0 && semigroup <= 1e-6,
         "terminal error " + sci(e1) + " -> " + sci(e2) + " (ratio " + sci(ratio) + "), semigroup defect " +
             sci(semigroup));
}

}  // namespace

int main() {
  run(1, linear_nullity);
  run(2, spectral_benchmark);
  run(3, implicit_anchors);
  run(4, oracle_equivalence);
  try {
    wright_checks();
  } catch (const std::exception& e) {
    for (int id = 5; id <= 8; ++id) report(id, false, std::string("exception: ") + e.what());
  }
  run(9, integrator_order);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
