#include <catch_amalgamated.hpp>

#include "support.hpp"

using Catch::Matchers::ContainsSubstring;
using cmsd::ConfigError;
using cmsd::parse_config;

namespace {
const char* kMinimal = R"j({"schema": 1, "model": {"g": "-(pi/2)*(x + x^2)"}})j";
}

TEST_CASE("defaults from a minimal config", "[config]") {
  const auto c = parse_config(kMinimal);
  CHECK(c.model.g.size() == 1);
  CHECK(c.model.r == "1");
  CHECK(c.model.h == 1.0);
  CHECK(c.N == 32);
  CHECK(c.order == 3);
  CHECK(c.require_center);
  CHECK(c.wants("json"));
  CHECK(c.wants("csv"));
}

TEST_CASE("fields are read", "[config]") {
  const auto c = parse_config(R"({"schema": 1, "model": {"g": ["x1*x2", "-x2"], "r": "1 + x1", "h": 2.5},
    "grid": {"N": 24}, "graphs": {"order": 4}, "spectral": {"require_center": false},
    "verify": {"radii": [0.02, 0.005]}, "output": {"formats": "json"}, "seed": 9})");
  CHECK(c.model.g == std::vector<std::string>{"x1*x2", "-x2"});
  CHECK(c.model.r == "1 + x1");
  CHECK(c.model.h == 2.5);
  CHECK(c.N == 24);
  CHECK(c.order == 4);
  CHECK_FALSE(c.require_center);
  CHECK(c.verify.radii == std::vector<double>{0.02, 0.005});
  CHECK_FALSE(c.wants("csv"));
  CHECK(c.seed == 9u);
}

TEST_CASE("config errors name the field", "[config]") {
  CHECK_THROWS_WITH(parse_config(R"({"schema": 1, "model": {"g": "x"}, "gird": {}})"),
                    ContainsSubstring("gird") && ContainsSubstring("unknown key"));
  CHECK_THROWS_WITH(parse_config(R"({"schema": 1, "model": {"g": "x", "hh": 1}})"), ContainsSubstring("model.hh"));
  CHECK_THROWS_WITH(parse_config(R"({"schema": 1, "model": {"g": "x"}, "grid": {"N": "32"}})"),
                    ContainsSubstring("grid.N") && ContainsSubstring("wrong type"));
  CHECK_THROWS_WITH(parse_config(R"({"schema": 1, "model": {"g": "x"}, "grid": {"N": 32.5}})"),
                    ContainsSubstring("grid.N"));
  CHECK_THROWS_WITH(parse_config(R"({"schema": 2, "model": {"g": "x"}})"), ContainsSubstring("schema"));
  CHECK_THROWS_WITH(parse_config(R"({"model": {"g": "x"}})"), ContainsSubstring("schema"));
  CHECK_THROWS_WITH(parse_config(R"({"schema": 1})"), ContainsSubstring("model"));
  CHECK_THROWS_AS(parse_config("[1, 2]"), ConfigError);
}

TEST_CASE("parse errors report the line", "[config]") {
  CHECK_THROWS_WITH(parse_config("{\n  \"schema\": 1,\n  \"model\": {\"g\": \"x\",}\n}"), ContainsSubstring("line 3"));
}

TEST_CASE("range validation", "[config]") {
  auto with = [](const std::string& extra) {
    return std::string(R"({"schema": 1, "model": {"g": "x"}, )") + extra + "}";
  };
  CHECK_NOTHROW(parse_config(with(R"("grid": {"N": 8})")));
  CHECK_NOTHROW(parse_config(with(R"("grid": {"N": 128})")));
  CHECK_THROWS_WITH(parse_config(with(R"("grid": {"N": 7})")), ContainsSubstring("grid.N"));
  CHECK_THROWS_WITH(parse_config(with(R"("grid": {"N": 129})")), ContainsSubstring("grid.N"));
  CHECK_NOTHROW(parse_config(with(R"("graphs": {"order": 2})")));
  CHECK_NOTHROW(parse_config(with(R"("graphs": {"order": 5})")));
  CHECK_THROWS_WITH(parse_config(with(R"("graphs": {"order": 1})")), ContainsSubstring("graphs.order"));
  CHECK_THROWS_WITH(parse_config(with(R"("graphs": {"order": 6})")), ContainsSubstring("graphs.order"));
  CHECK_THROWS_WITH(parse_config(R"({"schema": 1, "model": {"g": "x", "h": 0}})"), ContainsSubstring("model.h"));
  CHECK_THROWS_WITH(parse_config(with(R"("verify": {"radii": []})")), ContainsSubstring("verify.radii"));
  CHECK_THROWS_WITH(parse_config(with(R"("output": {"formats": ["xml"]})")), ContainsSubstring("xml"));
}

TEST_CASE("shipped example configs parse", "[config]") {
  for (const char* name :
       {"wright", "linear", "hopf_linear", "planar_ode", "two_population", "state_dependent"}) {
    INFO(name);
    CHECK_NOTHROW(cmsd::load_config(std::string(CMSD_SOURCE_DIR "/examples_cfg/") + name + ".json"));
  }
  CHECK_THROWS_AS(cmsd::load_config("/nonexistent/cfg.json"), ConfigError);
}

TEST_CASE("spectrum JSON schema", "[config]") {
  cmsd::Pipeline p(test::wright(16));
  const auto j = cmsd::io::spectrum_json(p.spectrum());
  for (const char* key : {"schema", "N", "n", "h", "dims", "eigenvalues", "roots", "residuals"}) CHECK(j.contains(key));
  CHECK(j["schema"] == 1);
  CHECK(j["dims"]["c"] == 2);
  CHECK(j["dims"]["u"] == 0);
  CHECK(j["eigenvalues"].size() == 2);
  for (const auto& e : j["eigenvalues"]) CHECK(std::abs(e["re"].get<double>()) <= 1e-8);
  const auto& r = j["roots"].front();
  for (const char* key : {"re", "im", "raw_re", "raw_im", "residual", "retained", "class"}) CHECK(r.contains(key));
  CHECK(cmsd::io::spectrum_csv(p.spectrum()).rfind("re,im,residual,retained,class\n", 0) == 0);
}

TEST_CASE("graph JSON schema", "[config]") {
  cmsd::Pipeline p(test::planar(3));
  const auto j = cmsd::io::graph_json(p.center_oracle());
  CHECK(j["kind"] == "center");
  CHECK(j["order"] == 3);
  CHECK(j["dims"]["domain"] == 1);
  const auto& monos = j["monomials"];
  REQUIRE(monos.size() == 2);
  CHECK(monos[0] == nlohmann::json::array({2}));
  CHECK(monos[1] == nlohmann::json::array({3}));
  REQUIRE(j["coefficients"].size() == p.center_oracle().codomain_dim());
  for (const auto& row : j["coefficients"]) CHECK(row.size() == 2);
}

TEST_CASE("report and trajectory CSV headers", "[config]") {
  cmsd::DefectReport r;
  r.tag = "C2";
  r.add(1e-2, 0.5, 3e-9);
  const std::string csv = cmsd::io::report_csv(r);
  CHECK(csv.rfind("radius,t,defect\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  const auto j = cmsd::io::report_json(r);
  for (const char* key : {"tag", "name", "radii", "horizon", "max_defect", "tolerance", "pass", "proxy", "note", "samples"})
    CHECK(j.contains(key));

  auto cfg = test::planar(2);
  cmsd::Pipeline p(cfg);
  cmsd::IntegrateOptions io;
  io.output_dt = 0.5;
  const auto tr = cmsd::integrate(p.model(), cmsd::lift(p.system(), p.chart(), Eigen::VectorXd::Constant(1, 0.01)), 1.0, io);
  const std::string traj = cmsd::io::trajectory_csv(tr);
  CHECK(traj.rfind("t,x1,x2,xf_defect\n", 0) == 0);
  CHECK(std::count(traj.begin(), traj.end(), '\n') == 4);
}
