#pragma once

// Forward integration of x'(t) = f(x_t) by the method of steps: classical RK4
// with a cubic-Hermite dense history, starting from the interpolant of the
// initial segment.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cmsd/error.hpp"
#include "cmsd/model.hpp"
#include "cmsd/segment.hpp"

namespace cmsd {

/// |φ'(0) - f(φ)| in the max-norm.
inline double xf_defect(const DelayModel& m, const Segment& phi) {
  return (phi.eval_derivative(0.0) - m.f_eval(phi)).cwiseAbs().maxCoeff();
}

/// φ + Zb·z with z chosen by Newton so that φ'(0) = f(φ + Zb z).
inline Segment project_to_xf(const DelayModel& m, const Segment& phi, const Eigen::MatrixXd& Zb,
                             double tol = 1e-12, int max_iter = 25) {
  const auto& grid = phi.grid();
  const int n = m.n();
  if (Zb.rows() != grid->dim() || Zb.cols() != n) throw ConfigError("project_to_xf: Z basis must be dim x n");
  std::vector<Segment> zcols;
  for (int i = 0; i < n; ++i) zcols.push_back(Segment::from_vector(grid, Zb.col(i)));
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  Segment cur = phi;
  for (int it = 0; it <= max_iter; ++it) {
    const Eigen::VectorXd res = cur.eval_derivative(0.0) - m.f_eval(cur);
    if (res.cwiseAbs().maxCoeff() <= tol) return cur;
    if (it == max_iter) break;
    Eigen::MatrixXd J(n, n);
    for (int i = 0; i < n; ++i) J.col(i) = zcols[i].eval_derivative(0.0) - m.df_eval(cur, zcols[i]);
    z -= J.partialPivLu().solve(res);
    cur = Segment::from_vector(grid, phi.as_vector() + Zb * z);
  }
  throw NonconvergenceError("project_to_xf: Newton did not converge in " + std::to_string(max_iter) + " iterations");
}

struct Trajectory {
  double t0 = 0.0;
  std::vector<double> times;
  std::vector<Segment> segments;
  std::vector<double> xf_defects;
  /// Last time the solution was computed to.
  double t_plus = 0.0;

  /// Index of the stored segment at time t (nearest output time within 1e-9).
  const Segment& at(double t) const {
    for (std::size_t i = 0; i < times.size(); ++i)
      if (std::abs(times[i] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return segments[i];
    throw DomainError("trajectory has no segment at t = " + std::to_string(t));
  }
  double max_xf_defect() const {
    double d = 0.0;
    for (double v : xf_defects) d = std::max(d, v);
    return d;
  }
};

/// Raised when the solution stops being finite; carries the computed part.
class BlowUpError : public NumericalError {
 public:
  BlowUpError(const std::string& what, Trajectory partial) : NumericalError(what), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

struct IntegrateOptions {
  double dt = 1e-3;
  /// Output spacing; rounded to a whole number of steps. <= 0 means every step.
  double output_dt = 0.0;
};

namespace semiflow_detail {

/// Dense solution: initial interpolant on [-h, 0], Hermite cubics on [0, t_n].
class History {
 public:
  History(const DelayModel& m, const Segment& phi, double dt) : m_(m), phi_(phi), dt_(dt) {
    times_.push_back(0.0);
    x_.push_back(phi.at_zero());
    f_.push_back(m.f_eval(phi));
  }

  double t_end() const { return times_.back(); }
  const Eigen::VectorXd& x_end() const { return x_.back(); }
  const Eigen::VectorXd& f_end() const { return f_.back(); }

  void push(double t, Eigen::VectorXd x, Eigen::VectorXd fx) {
    times_.push_back(t);
    x_.push_back(std::move(x));
    f_.push_back(std::move(fx));
  }

  /// x(τ) for τ <= t_end().
  Eigen::VectorXd value(double tau) const {
    if (tau <= 0.0) return phi_.eval(std::max(tau, -phi_.grid()->h));
    const int last = static_cast<int>(times_.size()) - 1;
    int k = std::min(static_cast<int>(std::floor(tau / dt_)), last - 1);
    k = std::max(k, 0);
    while (k < last - 1 && tau > times_[k + 1]) ++k;
    while (k > 0 && tau < times_[k]) --k;
    const double t0 = times_[k], hstep = times_[k + 1] - t0;
    const double s = (tau - t0) / hstep;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
    return h00 * x_[k] + h10 * hstep * f_[k] + h01 * x_[k + 1] + h11 * hstep * f_[k + 1];
  }

  /// Right-hand side at time t with current value x; delayed arguments past
  /// t_end() (delays shorter than the step) interpolate linearly to x.
  Eigen::VectorXd rhs(double t, const Eigen::VectorXd& x) const {
    const double rho = m_.r_eval(x);
    m_.check_rho(rho);
    if (rho > m_.h()) return m_.g_eval(value(t - m_.h()));
    const double tau = t - rho;
    if (tau <= t_end()) return m_.g_eval(value(tau));
    if (t == t_end()) return m_.g_eval(x);
    const double w = (tau - t_end()) / (t - t_end());
    return m_.g_eval((1 - w) * x_end() + w * x);
  }

  Segment segment_at(double t) const {
    const auto& grid = phi_.grid();
    Eigen::MatrixXd v(grid->num_nodes(), grid->n);
    for (int i = 0; i < grid->num_nodes(); ++i) v.row(i) = value(t + grid->nodes(i)).transpose();
    return Segment(grid, std::move(v));
  }

 private:
  const DelayModel& m_;
  Segment phi_;
  double dt_;
  std::vector<double> times_;
  std::vector<Eigen::VectorXd> x_, f_;
};

}  // namespace semiflow_detail

/// Integrates from φ over [0, T]; segments are emitted at multiples of output_dt and at T.
inline Trajectory integrate(const DelayModel& m, const Segment& phi, double T, const IntegrateOptions& opt = {}) {
  if (!(T > 0.0)) throw ConfigError("integrate: T must be positive");
  if (!(opt.dt > 0.0)) throw ConfigError("integrate: dt must be positive");
  if (phi.grid()->n != m.n()) throw ConfigError("integrate: segment dimension does not match the model");
  if (!phi.all_finite()) throw ConfigError("integrate: initial segment is not finite");

  const long steps = std::max(1L, std::lround(std::ceil(T / opt.dt - 1e-9)));
  const double dt = T / static_cast<double>(steps);
  const long every = opt.output_dt > 0.0 ? std::max(1L, std::lround(opt.output_dt / dt)) : 1L;

  semiflow_detail::History hist(m, phi, dt);
  Trajectory traj;
  auto emit = [&](double t) {
    Segment s = t == 0.0 ? phi : hist.segment_at(t);
    traj.times.push_back(t);
    traj.xf_defects.push_back(xf_defect(m, s));
    traj.segments.push_back(std::move(s));
    traj.t_plus = t;
  };
  emit(0.0);

  for (long k = 0; k < steps; ++k) {
    const double t = k * dt;
    const Eigen::VectorXd& x = hist.x_end();
    Eigen::VectorXd next, fnext;
    try {
      const Eigen::VectorXd k1 = hist.f_end();
      const Eigen::VectorXd x2 = x + 0.5 * dt * k1;
      const Eigen::VectorXd k2 = hist.rhs(t + 0.5 * dt, x2);
      const Eigen::VectorXd x3 = x + 0.5 * dt * k2;
      const Eigen::VectorXd k3 = hist.rhs(t + 0.5 * dt, x3);
      const Eigen::VectorXd x4 = x + dt * k3;
      const Eigen::VectorXd k4 = hist.rhs(t + dt, x4);
      next = x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
      if (!next.allFinite()) throw NumericalError("non-finite state");
      const double tn = (k + 1 == steps) ? T : (k + 1) * dt;
      fnext = hist.rhs(tn, next);
      if (!fnext.allFinite()) throw NumericalError("non-finite derivative");
      hist.push(tn, next, fnext);
    } catch (const NumericalError& e) {
      traj.t_plus = t;
      throw BlowUpError("integrate: blow-up near t = " + std::to_string(t) + " (" + e.what() + ")", traj);
    }
    if ((k + 1) % every == 0 || k + 1 == steps) emit(hist.t_end());
  }
  return traj;
}

/// F(t, φ): the segment x_t of the solution starting at φ.
inline Segment flow_map(const DelayModel& m, const Segment& phi, double t, double dt = 1e-3) {
  if (t < 0.0) throw DomainError("flow_map: negative time");
  if (t == 0.0) return phi;
  IntegrateOptions opt;
  opt.dt = dt;
  opt.output_dt = t;
  return integrate(m, phi, t, opt).segments.back();
}

}  // namespace cmsd
