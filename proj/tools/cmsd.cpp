// cmsd: center manifolds of state-dependent delay equations from a JSON config.
//
//   cmsd <spectrum|simulate|graphs|intersect|verify|all> --config PATH [--out DIR]
//        [--seed INT] [--order K] [--nodes N] [--quiet]
//
// Exit status: 0 when every requested check passes, 1 on numerical failure or
// a failed check, 2 on configuration errors.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cmsd/cmsd.hpp"

namespace {

using cmsd::io::json;

struct Options {
  std::string config;
  std::string out;
  std::optional<unsigned> seed;
  std::optional<int> order;
  std::optional<int> nodes;
  bool quiet = false;
};

class Runner {
 public:
  Runner(cmsd::Pipeline& p, std::string dir, bool quiet) : p_(p), dir_(std::move(dir)), quiet_(quiet) {}

  void spectrum() {
    const auto& sd = p_.spectrum();
    if (json_()) cmsd::io::write_json(path("spectrum.json"), cmsd::io::spectrum_json(sd));
    if (csv_()) cmsd::io::write_file(path("spectrum.csv"), cmsd::io::spectrum_csv(sd));
    log("spectrum: dim C_u = " + std::to_string(sd.d_u) + ", dim C_c = " + std::to_string(sd.d_c) +
        ", dim Y_s = " + std::to_string(sd.d_s));
  }

  void simulate() {
    const cmsd::Trajectory tr = p_.simulate();
    cmsd::io::write_file(path("simulate.csv"), cmsd::io::trajectory_csv(tr));
    log("simulate: " + std::to_string(tr.times.size()) + " samples to t = " + std::to_string(tr.t_plus) +
        ", max xf defect " + fmt(tr.max_xf_defect()));
  }

  void graphs() {
    json doc = {{"schema", 1}, {"order", p_.config().order}};
    doc["graphs"] = {{"center_stable", cmsd::io::graph_json(p_.center_stable())},
                     {"center_unstable", cmsd::io::graph_json(p_.center_unstable())},
                     {"center", cmsd::io::graph_json(p_.center_oracle())}};
    cmsd::io::write_json(path("graphs.json"), doc);
    log("graphs: resubstitution defects cs " + fmt(p_.center_stable().resubstitution_defect) + ", cu " +
        fmt(p_.center_unstable().resubstitution_defect) + ", center " +
        fmt(p_.center_oracle().resubstitution_defect));
  }

  void intersect() {
    const auto& ir = p_.intersection();
    const double dev = p_.oracle_deviation();
    json newton = json::array();
    for (const auto& r : ir.newton)
      newton.push_back({{"iterations", r.iterations},
                        {"residual", r.residual},
                        {"jacobian_cond", r.jacobian_cond},
                        {"continuation", r.continuation},
                        {"out_of_box", r.out_of_box}});
    json stencil = json::array();
    for (const auto& c : ir.stencil) stencil.push_back(cmsd::io::to_json(c));
    const auto basis = ir.w_c.basis();
    json g_poly = json::array();
    for (const auto& s : ir.g_poly) {
      json row = json::array();
      for (int j = basis->offset(2); j < basis->size(); ++j) row.push_back(s.coeffs()(j));
      g_poly.push_back(row);
    }
    json doc = {{"schema", 1},
                {"w_c", cmsd::io::graph_json(ir.w_c)},
                {"w_c_fit", cmsd::io::graph_json(ir.w_c_fit)},
                {"oracle", cmsd::io::graph_json(p_.center_oracle())},
                {"g_poly", g_poly},
                {"diagnostics",
                 {{"oracle_deviation", dev},
                  {"consistency", ir.consistency},
                  {"pointwise_deviation", ir.pointwise_deviation},
                  {"max_jacobian_cond", ir.max_jacobian_cond},
                  {"stencil_radius", p_.config().stencil_radius}}},
                {"stencil", stencil},
                {"newton", newton}};
    if (json_()) cmsd::io::write_json(path("wc.json"), doc);
    if (csv_()) cmsd::io::write_file(path("wc.csv"), cmsd::io::manifold_csv(ir.stencil, p_.lifted_stencil()));
    log("intersect: |w_c - oracle| = " + fmt(dev) + ", route consistency " + fmt(ir.consistency));
  }

  bool verify() {
    const auto reports = p_.verify();
    json arr = json::array();
    bool ok = true;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      const auto& r = reports[i];
      arr.push_back(cmsd::io::report_json(r));
      ok = ok && r.pass;
      if (csv_()) {
        std::string name = "defect_" + std::to_string(i) + "_" + r.tag + (r.name.empty() ? "" : "_" + r.name) + ".csv";
        cmsd::io::write_file(path(name), cmsd::io::report_csv(r));
      }
      log("verify: " + r.tag + (r.name.empty() ? "" : "/" + r.name) + (r.pass ? " PASS" : " FAIL") + " max " +
          fmt(r.max_defect) + " tol " + fmt(r.tolerance) + (r.note.empty() ? "" : " (" + r.note + ")"));
    }
    cmsd::io::write_json(path("report.json"), {{"schema", 1}, {"reports", arr}});
    return ok;
  }

 private:
  std::string path(const std::string& name) const { return (std::filesystem::path(dir_) / name).string(); }
  bool json_() const { return p_.config().wants("json"); }
  bool csv_() const { return p_.config().wants("csv"); }
  void log(const std::string& msg) const {
    if (!quiet_) std::cerr << msg << "\n";
  }
  static std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
  }

  cmsd::Pipeline& p_;
  std::string dir_;
  bool quiet_;
};

int run(const std::string& cmd, const Options& o) {
  cmsd::RunConfig cfg = cmsd::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.order) cfg.order = *o.order;
  if (o.nodes) cfg.N = *o.nodes;
  if (!o.out.empty()) cfg.out_dir = o.out;
  cfg.validate();

  std::optional<cmsd::Pipeline> pipeline;
  try {
    pipeline.emplace(cfg);
  } catch (const cmsd::Error& e) {
    throw cmsd::ConfigError(std::string("model: ") + e.what());
  }
  std::filesystem::create_directories(cfg.out_dir);
  Runner r(*pipeline, cfg.out_dir, o.quiet);

  bool ok = true;
  if (cmd == "spectrum" || cmd == "all") r.spectrum();
  if (cmd == "simulate" || cmd == "all") r.simulate();
  if (cmd == "graphs" || cmd == "all") r.graphs();
  if (cmd == "intersect" || cmd == "all") r.intersect();
  if (cmd == "verify" || cmd == "all") ok = r.verify();
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Center manifolds of state-dependent delay equations"};
  app.require_subcommand(1);
  Options o;
  for (const char* name : {"spectrum", "simulate", "graphs", "intersect", "verify", "all"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", o.config, "JSON run configuration")->required();
    sub->add_option("--out", o.out, "output directory (overrides output.directory)");
    sub->add_option("--seed", o.seed, "sampling seed");
    sub->add_option("--order", o.order, "graph truncation order k");
    sub->add_option("--nodes", o.nodes, "collocation degree N");
    sub->add_flag("--quiet", o.quiet, "suppress progress output");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    return run(cmd, o);
  } catch (const cmsd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
