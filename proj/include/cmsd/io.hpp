#pragma once

// JSON and CSV serialization of pipeline results. All documents carry
// "schema": 1; numbers are written with full precision.

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmsd/graphs.hpp"
#include "cmsd/intersection.hpp"
#include "cmsd/semiflow.hpp"
#include "cmsd/spectral.hpp"
#include "cmsd/verify.hpp"

namespace cmsd::io {

using json = nlohmann::json;

inline json to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline json to_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (int i = 0; i < m.rows(); ++i) a.push_back(to_json(Eigen::VectorXd(m.row(i).transpose())));
  return a;
}

/// Node values of a segment, node 0 (θ = 0) first; one array of n values per node.
inline json to_json(const Segment& s) {
  json a = json::array();
  for (int i = 0; i < s.values().rows(); ++i) a.push_back(to_json(Eigen::VectorXd(s.values().row(i).transpose())));
  return a;
}

inline json spectrum_json(const SpectralDecomposition& sd) {
  json roots = json::array();
  for (const auto& r : sd.roots) {
    roots.push_back({{"re", r.value.real()},
                     {"im", r.value.imag()},
                     {"raw_re", r.raw.real()},
                     {"raw_im", r.raw.imag()},
                     {"residual", r.residual},
                     {"retained", r.retained},
                     {"class", to_string(r.cls)}});
  }
  json eig = json::array();
  for (const auto& r : sd.roots)
    if (r.retained && r.cls != RootClass::stable) eig.push_back({{"re", r.value.real()}, {"im", r.value.imag()}});
  return {{"schema", 1},
          {"N", sd.grid->N},
          {"n", sd.n},
          {"h", sd.grid->h},
          {"dims", {{"u", sd.d_u}, {"c", sd.d_c}, {"s", sd.d_s}, {"z", sd.n}}},
          {"eigenvalues", eig},
          {"roots", roots},
          {"residuals",
           {{"block", sd.block_residual},
            {"commutation", sd.commutation_residual},
            {"transversality_cond", sd.transversality_cond},
            {"max_re_stable_block", sd.max_re_stable_block}}}};
}

inline std::string spectrum_csv(const SpectralDecomposition& sd) {
  std::string out = "re,im,residual,retained,class\n";
  char buf[160];
  for (const auto& r : sd.roots) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%d,%s\n", r.value.real(), r.value.imag(), r.residual,
                  r.retained ? 1 : 0, to_string(r.cls));
    out += buf;
  }
  return out;
}

inline json blocks_json(const std::vector<std::pair<Block, int>>& blocks) {
  json a = json::array();
  for (const auto& [b, d] : blocks) a.push_back({{"block", to_string(b)}, {"dim", d}});
  return a;
}

/// {order, dims, monomials, coefficients}: coefficients[q][j] multiplies monomials[j] in component q.
inline json graph_json(const GraphMap& w) {
  const MonomialBasis& B = *w.basis();
  json monos = json::array();
  for (int j = B.offset(2); j < B.size(); ++j) {
    json e = json::array();
    for (int v = 0; v < B.num_vars(); ++v) e.push_back(static_cast<int>(B.exponents(j)[v]));
    monos.push_back(e);
  }
  json coeffs = json::array();
  for (int q = 0; q < w.codomain_dim(); ++q) {
    json row = json::array();
    for (int j = B.offset(2); j < B.size(); ++j) row.push_back(w.coeffs()(q, j));
    coeffs.push_back(row);
  }
  return {{"kind", to_string(w.kind())},
          {"order", w.order()},
          {"dims", {{"domain", w.domain_dim()}, {"codomain", w.codomain_dim()}}},
          {"domain_blocks", blocks_json(w.domain_blocks())},
          {"codomain_blocks", blocks_json(w.codomain_blocks())},
          {"domain_radius", w.domain_radius()},
          {"monomials", monos},
          {"coefficients", coeffs},
          {"resubstitution_defect", w.resubstitution_defect}};
}

inline json report_json(const DefectReport& r) {
  json samples = json::array();
  for (const auto& s : r.samples) samples.push_back({{"radius", s.radius}, {"t", s.t}, {"defect", s.defect}});
  return {{"tag", r.tag},         {"name", r.name},           {"radii", r.radii},
          {"horizon", r.horizon}, {"max_defect", r.max_defect}, {"tolerance", r.tolerance},
          {"pass", r.pass},       {"proxy", r.proxy},         {"note", r.note},
          {"samples", samples}};
}

inline std::string report_csv(const DefectReport& r) {
  std::string out = "radius,t,defect\n";
  char buf[96];
  for (const auto& s : r.samples) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", s.radius, s.t, s.defect);
    out += buf;
  }
  return out;
}

/// t, x1..xn (the state x(t) = segment value at θ = 0), xf_defect.
inline std::string trajectory_csv(const Trajectory& tr) {
  const int n = tr.segments.empty() ? 0 : tr.segments.front().grid()->n;
  std::string out = "t";
  for (int i = 1; i <= n; ++i) out += ",x" + std::to_string(i);
  out += ",xf_defect\n";
  char buf[64];
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", tr.times[k]);
    out += buf;
    const Eigen::VectorXd x = tr.segments[k].at_zero();
    for (int i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g", x(i));
      out += buf;
    }
    std::snprintf(buf, sizeof buf, ",%.17g\n", tr.xf_defects[k]);
    out += buf;
  }
  return out;
}

/// Sampled manifold points: c1..c_dc, then the lifted segment values x_<node>_<component>.
inline std::string manifold_csv(const std::vector<Eigen::VectorXd>& cs, const std::vector<Segment>& lifted) {
  std::string out;
  if (cs.empty()) return out;
  const int dc = static_cast<int>(cs.front().size());
  const GridPtr grid = lifted.front().grid();
  std::vector<std::string> cols;
  for (int i = 1; i <= dc; ++i) cols.push_back("c" + std::to_string(i));
  for (int k = 0; k <= grid->N; ++k)
    for (int i = 1; i <= grid->n; ++i) cols.push_back("x_" + std::to_string(k) + "_" + std::to_string(i));
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  out += "\n";
  char buf[40];
  for (std::size_t p = 0; p < cs.size(); ++p) {
    std::string line;
    for (int i = 0; i < dc; ++i) {
      std::snprintf(buf, sizeof buf, "%s%.17g", i ? "," : "", cs[p](i));
      line += buf;
    }
    const Eigen::VectorXd x = lifted[p].as_vector();
    for (int i = 0; i < x.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%s%.17g", (dc == 0 && i == 0) ? "" : ",", x(i));
      line += buf;
    }
    out += line + "\n";
  }
  return out;
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path + "'");
  f << text;
}

inline void write_json(const std::string& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

}  // namespace cmsd::io
