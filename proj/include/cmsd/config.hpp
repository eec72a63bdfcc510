#pragma once

// Run configuration: JSON with "schema": 1. Every field except model is
// optional; defaults are the values below.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmsd/error.hpp"

namespace cmsd {

struct ModelConfig {
  std::vector<std::string> g;
  std::string r = "1";
  double h = 1.0;
  double validity_radius = 0.1;
};

struct SimulateConfig {
  double T = 4.0;
  double dt = 1e-3;
  double output_dt = 0.1;
  /// Initial history per component, as expressions in t ∈ [-h, 0].
  std::vector<std::string> initial;
  /// Alternatively a point c on the center manifold to lift.
  std::vector<double> center;
};

struct VerifyConfig {
  std::vector<double> radii{1e-2, 3e-3, 1e-3};
  double horizon = 5.0;
  double dt = 1e-3;
  double output_dt = 0.05;
  int points = 8;
  double box = 0.1;
  double invariance_tol = 1e-7;
  double min_shrink = 30.0;
  double subset_tol = 1e-8;
  double submanifold_tol = 1e-8;
  double consistency_tol = 1e-8;
  double global_horizon = 10.0;
  double global_radius = 1e-2;
  double global_tol = 1e-6;
  std::vector<double> tangency_radii{1e-1, 1e-2, 1e-3, 1e-4};
  double min_slope = 1.9;
};

struct RunConfig {
  int schema = 1;
  ModelConfig model;
  int N = 32;
  double tol_center = 1e-8;
  bool polish = true;
  bool require_center = true;
  int order = 3;
  double domain_radius = 0.05;
  double newton_tol = 1e-12;
  int max_iter = 50;
  int stencil_size = 50;
  double stencil_radius = 2e-3;
  double fit_tol = 1e-8;
  SimulateConfig simulate;
  VerifyConfig verify;
  std::string out_dir = "out";
  std::vector<std::string> formats{"json", "csv"};
  unsigned seed = 1;

  bool wants(const std::string& fmt) const {
    for (const auto& f : formats)
      if (f == fmt) return true;
    return false;
  }

  /// Range checks; throws ConfigError naming the field.
  void validate() const {
    auto fail = [](const std::string& field, const std::string& msg) {
      throw ConfigError("config field '" + field + "': " + msg);
    };
    auto positive = [&](const std::string& field, double v) {
      if (!(v > 0.0)) fail(field, "must be > 0");
    };
    if (schema != 1) fail("schema", "unsupported version " + std::to_string(schema));
    if (model.g.empty()) fail("model.g", "at least one component required");
    positive("model.h", model.h);
    positive("model.validity_radius", model.validity_radius);
    if (N < 8 || N > 128) fail("grid.N", "must be in [8, 128]");
    if (order < 2 || order > 5) fail("graphs.order", "must be in [2, 5]");
    positive("spectral.tol_center", tol_center);
    positive("graphs.domain_radius", domain_radius);
    positive("intersect.tol", newton_tol);
    if (max_iter < 1) fail("intersect.max_iter", "must be >= 1");
    if (stencil_size < 1) fail("intersect.stencil_size", "must be >= 1");
    positive("intersect.stencil_radius", stencil_radius);
    positive("intersect.fit_tol", fit_tol);
    positive("simulate.T", simulate.T);
    positive("simulate.dt", simulate.dt);
    if (simulate.output_dt < 0.0) fail("simulate.output_dt", "must be >= 0");
    if (!simulate.initial.empty() && simulate.initial.size() != model.g.size())
      fail("simulate.initial", "needs one expression per component");
    if (verify.radii.empty()) fail("verify.radii", "at least one radius required");
    for (double r : verify.radii) positive("verify.radii", r);
    for (double r : verify.tangency_radii) positive("verify.tangency_radii", r);
    if (verify.tangency_radii.size() < 2) fail("verify.tangency_radii", "at least two radii required");
    positive("verify.horizon", verify.horizon);
    positive("verify.dt", verify.dt);
    positive("verify.output_dt", verify.output_dt);
    if (verify.points < 1) fail("verify.points", "must be >= 1");
    positive("verify.box", verify.box);
    positive("verify.invariance_tol", verify.invariance_tol);
    positive("verify.min_shrink", verify.min_shrink);
    positive("verify.subset_tol", verify.subset_tol);
    positive("verify.submanifold_tol", verify.submanifold_tol);
    positive("verify.consistency_tol", verify.consistency_tol);
    positive("verify.global_horizon", verify.global_horizon);
    positive("verify.global_radius", verify.global_radius);
    positive("verify.global_tol", verify.global_tol);
    positive("verify.min_slope", verify.min_slope);
    for (const auto& f : formats)
      if (f != "json" && f != "csv") fail("output.formats", "unknown format '" + f + "'");
  }
};

namespace config_detail {

using json = nlohmann::json;

inline const json* child(const json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

template <class T>
void read(const json& j, const char* key, const std::string& path, T& out) {
  const json* v = child(j, key);
  if (!v) return;
  try {
    if constexpr (std::is_same_v<T, int> || std::is_same_v<T, unsigned>) {
      if (!v->is_number_integer()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v->is_number()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v->is_boolean()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v->is_string()) throw ConfigError("");
    }
    out = v->get<T>();
  } catch (const std::exception&) {
    throw ConfigError("config field '" + path + key + "': wrong type (" + v->type_name() + ")");
  }
}

inline std::vector<std::string> string_list(const json& v, const std::string& field) {
  if (v.is_string()) return {v.get<std::string>()};
  if (!v.is_array()) throw ConfigError("config field '" + field + "': expected a string or an array of strings");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw ConfigError("config field '" + field + "': expected strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

inline std::vector<double> number_list(const json& v, const std::string& field) {
  if (!v.is_array()) throw ConfigError("config field '" + field + "': expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError("config field '" + field + "': expected numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

inline void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError("config field '" + (path.empty() ? "<root>" : path) + "': expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw ConfigError("config field '" + path + it.key() + "': unknown key");
  }
}

inline std::size_t line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

}  // namespace config_detail

inline RunConfig parse_config(const std::string& text) {
  using namespace config_detail;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error at line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
  }
  RunConfig c;
  check_keys(j, "", {"schema", "model", "grid", "spectral", "graphs", "intersect", "simulate", "verify", "output", "seed"});
  if (!child(j, "schema")) throw ConfigError("config field 'schema': missing (expected 1)");
  read(j, "schema", "", c.schema);
  read(j, "seed", "", c.seed);

  const json* m = child(j, "model");
  if (!m) throw ConfigError("config field 'model': missing");
  check_keys(*m, "model.", {"g", "r", "h", "validity_radius"});
  if (!child(*m, "g")) throw ConfigError("config field 'model.g': missing");
  c.model.g = string_list(*child(*m, "g"), "model.g");
  read(*m, "r", "model.", c.model.r);
  read(*m, "h", "model.", c.model.h);
  read(*m, "validity_radius", "model.", c.model.validity_radius);

  if (const json* g = child(j, "grid")) {
    check_keys(*g, "grid.", {"N"});
    read(*g, "N", "grid.", c.N);
  }
  if (const json* s = child(j, "spectral")) {
    check_keys(*s, "spectral.", {"tol_center", "polish", "require_center"});
    read(*s, "tol_center", "spectral.", c.tol_center);
    read(*s, "polish", "spectral.", c.polish);
    read(*s, "require_center", "spectral.", c.require_center);
  }
  if (const json* g = child(j, "graphs")) {
    check_keys(*g, "graphs.", {"order", "domain_radius"});
    read(*g, "order", "graphs.", c.order);
    read(*g, "domain_radius", "graphs.", c.domain_radius);
  }
  if (const json* s = child(j, "intersect")) {
    check_keys(*s, "intersect.", {"tol", "max_iter", "stencil_size", "stencil_radius", "fit_tol"});
    read(*s, "tol", "intersect.", c.newton_tol);
    read(*s, "max_iter", "intersect.", c.max_iter);
    read(*s, "stencil_size", "intersect.", c.stencil_size);
    read(*s, "stencil_radius", "intersect.", c.stencil_radius);
    read(*s, "fit_tol", "intersect.", c.fit_tol);
  }
  if (const json* s = child(j, "simulate")) {
    check_keys(*s, "simulate.", {"T", "dt", "output_dt", "initial", "center"});
    read(*s, "T", "simulate.", c.simulate.T);
    read(*s, "dt", "simulate.", c.simulate.dt);
    read(*s, "output_dt", "simulate.", c.simulate.output_dt);
    if (const json* v = child(*s, "initial")) c.simulate.initial = string_list(*v, "simulate.initial");
    if (const json* v = child(*s, "center")) c.simulate.center = number_list(*v, "simulate.center");
  }
  if (const json* v = child(j, "verify")) {
    auto& vc = c.verify;
    check_keys(*v, "verify.",
               {"radii", "horizon", "dt", "output_dt", "points", "box", "invariance_tol", "min_shrink", "subset_tol",
                "submanifold_tol", "consistency_tol", "global_horizon", "global_radius", "global_tol",
                "tangency_radii", "min_slope"});
    if (const json* r = child(*v, "radii")) vc.radii = number_list(*r, "verify.radii");
    if (const json* r = child(*v, "tangency_radii")) vc.tangency_radii = number_list(*r, "verify.tangency_radii");
    read(*v, "horizon", "verify.", vc.horizon);
    read(*v, "dt", "verify.", vc.dt);
    read(*v, "output_dt", "verify.", vc.output_dt);
    read(*v, "points", "verify.", vc.points);
    read(*v, "box", "verify.", vc.box);
    read(*v, "invariance_tol", "verify.", vc.invariance_tol);
    read(*v, "min_shrink", "verify.", vc.min_shrink);
    read(*v, "subset_tol", "verify.", vc.subset_tol);
    read(*v, "submanifold_tol", "verify.", vc.submanifold_tol);
    read(*v, "consistency_tol", "verify.", vc.consistency_tol);
    read(*v, "global_horizon", "verify.", vc.global_horizon);
    read(*v, "global_radius", "verify.", vc.global_radius);
    read(*v, "global_tol", "verify.", vc.global_tol);
    read(*v, "min_slope", "verify.", vc.min_slope);
  }
  if (const json* o = child(j, "output")) {
    check_keys(*o, "output.", {"directory", "formats"});
    read(*o, "directory", "output.", c.out_dir);
    if (const json* f = child(*o, "formats")) c.formats = string_list(*f, "output.formats");
  }
  c.validate();
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace cmsd
