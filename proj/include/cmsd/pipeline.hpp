#pragma once

// Stage-by-stage pipeline over a RunConfig: spectrum → graphs → intersection
// → verification. Stages run lazily and are cached; objects referenced by
// later stages live on the heap so their addresses are stable.

#include <memory>
#include <string>
#include <vector>

#include "cmsd/config.hpp"
#include "cmsd/graphs.hpp"
#include "cmsd/intersection.hpp"
#include "cmsd/model.hpp"
#include "cmsd/semiflow.hpp"
#include "cmsd/spectral.hpp"
#include "cmsd/verify.hpp"

namespace cmsd {

inline DelayModel make_model(const ModelConfig& mc) {
  return DelayModel(mc.g, mc.r, mc.h, mc.validity_radius);
}

class Pipeline {
 public:
  explicit Pipeline(RunConfig cfg) : cfg_(std::move(cfg)), model_(make_model(cfg_.model)) {
    grid_ = make_grid(cfg_.model.h, model_.n(), cfg_.N);
  }
  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  const RunConfig& config() const { return cfg_; }
  const DelayModel& model() const { return model_; }
  const GridPtr& grid() const { return grid_; }

  const SpectralDecomposition& spectrum() {
    if (!sd_) {
      SpectralOptions opt;
      opt.tol_center = cfg_.tol_center;
      opt.polish = cfg_.polish;
      opt.require_center = cfg_.require_center;
      sd_ = std::make_unique<SpectralDecomposition>(decompose(model_, grid_, opt));
    }
    return *sd_;
  }

  const ChartAtlas& chart() {
    if (!chart_) chart_ = std::make_unique<ChartAtlas>(build_chart(model_, spectrum()));
    return *chart_;
  }

  const ReducedDynamics& reduced() {
    if (!red_) red_ = std::make_unique<ReducedDynamics>(reduce(model_, spectrum(), cfg_.order));
    return *red_;
  }

  const GraphMap& center_stable() { return graph(cs_, GraphKind::center_stable); }
  const GraphMap& center_unstable() { return graph(cu_, GraphKind::center_unstable); }
  const GraphMap& center_oracle() { return graph(oracle_, GraphKind::center); }

  const ImplicitSystem& system() {
    if (!sys_) sys_ = std::make_unique<ImplicitSystem>(center_stable(), center_unstable(), spectrum());
    return *sys_;
  }

  const IntersectionResult& intersection() {
    if (!ir_) {
      IntersectOptions opt;
      opt.tol = cfg_.newton_tol;
      opt.max_iter = cfg_.max_iter;
      opt.stencil_size = cfg_.stencil_size;
      opt.stencil_radius = cfg_.stencil_radius;
      opt.consistency_tol = cfg_.fit_tol;
      opt.seed = cfg_.seed;
      ir_ = std::make_unique<IntersectionResult>(build_wc(system(), opt));
    }
    return *ir_;
  }

  /// Largest coefficient difference between the intersection w_c and the direct center-graph oracle.
  double oracle_deviation() {
    const auto& a = intersection().w_c.coeffs();
    const auto& b = center_oracle().coeffs();
    return a.size() ? (a - b).cwiseAbs().maxCoeff() : 0.0;
  }

  std::vector<Segment> lifted_stencil() {
    std::vector<Segment> out;
    for (const auto& c : intersection().stencil) out.push_back(lift(system(), chart(), c));
    return out;
  }

  /// Initial segment for `simulate`: a lifted center point, an expression
  /// history projected onto X_f, or the zero segment.
  Segment initial_segment() {
    const auto& sc = cfg_.simulate;
    if (!sc.center.empty()) {
      if (static_cast<int>(sc.center.size()) != spectrum().d_c)
        throw ConfigError("config field 'simulate.center': expected " + std::to_string(spectrum().d_c) +
                          " coordinates");
      return lift(system(), chart(), Eigen::Map<const Eigen::VectorXd>(sc.center.data(), sc.center.size()));
    }
    if (sc.initial.empty()) return Segment::zero(grid_);
    std::vector<Expression> comps;
    for (const auto& text : sc.initial) comps.push_back(Expression::parse(text, std::vector<std::string>{"t"}));
    const Segment phi = Segment::sample(grid_, [&](double t) {
      Eigen::VectorXd v(comps.size());
      for (std::size_t i = 0; i < comps.size(); ++i) {
        const double arg[1] = {t};
        v(static_cast<int>(i)) = comps[i](std::span<const double>(arg, 1));
      }
      return v;
    });
    return project_to_xf(model_, phi, spectrum().basis_z);
  }

  Trajectory simulate() {
    IntegrateOptions io;
    io.dt = cfg_.simulate.dt;
    io.output_dt = cfg_.simulate.output_dt;
    return integrate(model_, initial_segment(), cfg_.simulate.T, io);
  }

  /// The full verification suite; one report per check.
  std::vector<DefectReport> verify() {
    const auto& vc = cfg_.verify;
    const auto& sys = system();
    const auto& ch = chart();
    const auto& ir = intersection();
    std::vector<DefectReport> out;
    out.push_back(check_submanifold(model_, sys, ch, ir.stencil, vc.submanifold_tol));

    InvarianceOptions io;
    io.horizon = vc.horizon;
    io.dt = vc.dt;
    io.output_dt = vc.output_dt;
    io.points = vc.points;
    io.box = vc.box;
    std::vector<double> maxima;
    for (std::size_t i = 0; i < vc.radii.size(); ++i) {
      out.push_back(check_positive_invariance(model_, sys, ch, ir.w_c, vc.radii[i], vc.invariance_tol, io));
      maxima.push_back(out.back().max_defect);
    }
    if (vc.radii.size() >= 2) out.push_back(invariance_scaling(vc.radii, maxima));

    for (const GraphMap* w : {&center_stable(), &center_unstable()}) {
      if (w->domain_dim() == 0) continue;
      auto rep = check_graph_invariance(model_, spectrum(), ch, *w, vc.radii.front(), vc.invariance_tol, io);
      out.push_back(rep);
    }
    out.push_back(
        check_global_trajectory(model_, sys, ch, ir.w_c, vc.global_radius, vc.global_horizon, vc.global_tol, vc.dt));
    out.push_back(check_attraction(model_, sys, ch, ir.w_c, vc.global_radius, vc.global_radius / 10.0,
                                   vc.global_horizon, vc.dt));
    out.push_back(check_subset(sys, ch, ir.stencil, vc.subset_tol));
    out.push_back(check_uniqueness_of_projected_point(model_, sys, ch, ir.stencil, 0.0, vc.consistency_tol));
    out.push_back(check_representations(sys, ir.stencil, vc.consistency_tol));
    if (spectrum().d_c > 0) out.push_back(check_tangency(sys, vc.tangency_radii, vc.min_slope));
    return out;
  }

  /// C2 scaling: consecutive radii must shrink the max defect by min_shrink and
  /// the log-log slope must reach the graph order k. Defects at the roundoff floor are skipped.
  DefectReport invariance_scaling(const std::vector<double>& radii, const std::vector<double>& maxima) const {
    DefectReport rep;
    rep.tag = "C2";
    rep.name = "scaling";
    rep.radii = radii;
    rep.horizon = cfg_.verify.horizon;
    rep.tolerance = 0.0;
    const double floor = 1e-13;
    for (std::size_t i = 0; i + 1 < radii.size(); ++i) {
      if (maxima[i] <= floor) continue;
      const double shrink = maxima[i] / std::max(maxima[i + 1], 1e-300);
      // the defect recorded is the relative shortfall of the shrink factor
      rep.add(radii[i + 1], 0.0, std::max(0.0, 1.0 - shrink / cfg_.verify.min_shrink));
    }
    bool above_floor = true;
    for (double d : maxima) above_floor = above_floor && d > floor;
    if (above_floor) {
      const double slope = loglog_slope(radii, maxima);
      rep.add(0.0, 0.0, std::max(0.0, cfg_.order - slope));
      rep.note = "log-log slope " + sci(slope) + ";";
    }
    rep.note += " max defects";
    for (double d : maxima) rep.note += " " + sci(d);
    rep.finish();
    return rep;
  }

 private:
  const GraphMap& graph(std::unique_ptr<GraphMap>& slot, GraphKind kind) {
    if (!slot) {
      slot = std::make_unique<GraphMap>(solve_graph(reduced(), kind));
      slot->set_domain_radius(cfg_.domain_radius);
    }
    return *slot;
  }

  RunConfig cfg_;
  DelayModel model_;
  GridPtr grid_;
  std::unique_ptr<SpectralDecomposition> sd_;
  std::unique_ptr<ChartAtlas> chart_;
  std::unique_ptr<ReducedDynamics> red_;
  std::unique_ptr<GraphMap> cs_, cu_, oracle_;
  std::unique_ptr<ImplicitSystem> sys_;
  std::unique_ptr<IntersectionResult> ir_;
};

}  // namespace cmsd
