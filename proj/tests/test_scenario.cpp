#include <catch2/catch_amalgamated.hpp>
#include <fstream>

#include "twistar/suites.hpp"

using namespace twistar;

TEST_CASE("empty config parses to the documented defaults") {
  ScenarioConfig c = parse_scenario(json::object());
  CHECK(c.schema_version == 1);
  CHECK(c.dim == 2);
  CHECK(c.points == 64);
  CHECK(c.theta_blocks == std::vector<double>{0.5});
  CHECK(c.twist_family == "identity");
  CHECK(c.field_family == "zero");
  CHECK(c.truncation_order == 4);
  CHECK(c.tolerances == default_tolerances());
  CHECK(c.suites.size() == 5);
}

TEST_CASE("unknown keys are rejected everywhere") {
  CHECK_THROWS_AS(parse_scenario(json{{"gird", json::object()}}),
                  ScenarioError);
  CHECK_THROWS_AS(parse_scenario(json{{"grid", {{"pionts", 32}}}}),
                  ScenarioError);
  CHECK_THROWS_AS(parse_scenario(json{{"tolerances", {{"unlisted", 1.0}}}}),
                  ScenarioError);
  CHECK_THROWS_AS(parse_scenario(json{{"suites", {"verify", "nope"}}}),
                  ScenarioError);
  CHECK_THROWS_AS(parse_scenario(json{{"field", {{"family", "planewave"}}}}),
                  ScenarioError);
  CHECK_THROWS_AS(parse_scenario(json{{"twist", {{"family", "spiral"}}}}),
                  ScenarioError);
  CHECK_THROWS_AS(parse_scenario(json{{"schema_version", 2}}), ScenarioError);
}

TEST_CASE("normal form round-trips") {
  json in = {{"schema_version", 1},
             {"grid", {{"points", 48}, {"half_width", 5.0}}},
             {"params", {{"mass_sq", 0.7}, {"lambda", 1.1}}},
             {"field", {{"family", "gaussian"}, {"center", {0.5, -0.2}}}},
             {"tolerances", {{"bookkeeping", 2e-5}}}};
  ScenarioConfig c = parse_scenario(in);
  CHECK(c.points == 48);
  CHECK(c.margin == 6);  // untouched default
  CHECK(c.tolerances.at("bookkeeping") == 2e-5);
  CHECK(c.tolerances.at("unit_law") == 1e-14);
  json nf = scenario_to_json(c);
  CHECK(scenario_to_json(parse_scenario(nf)) == nf);
}

TEST_CASE("theta shape validation") {
  ScenarioConfig c;
  c.theta_blocks = {0.5, 0.3};  // 2 blocks need dim 4
  CHECK_THROWS_AS(make_theta(c), ScenarioError);
  c.theta_blocks.clear();
  c.theta_matrix = {0.0, 0.5, -0.5};  // wrong size
  CHECK_THROWS_AS(make_theta(c), ScenarioError);
  c.theta_matrix = {0.0, 0.5, -0.5, 0.0};
  CHECK(make_theta(c).at(0, 1) == 0.5);
}

TEST_CASE("runtime owns a stable grid") {
  ScenarioConfig c;
  c.points = 32;
  c.margin = 4;
  c.field_family = "gaussian";
  ScenarioRuntime rt = build_runtime(c);
  CHECK(&rt.cfg->grid() == rt.grid.get());
  CHECK(rt.cfg->grid().points_per_axis() == 32);
  CHECK(std::abs(rt.cfg->phi[rt.grid->linear(std::vector<int>{16, 16})]) >
        0.5);
}

TEST_CASE("onshell-gaussian family tunes the mass to the coupling") {
  ScenarioConfig c;
  c.points = 32;
  c.margin = 4;
  c.field_family = "onshell-gaussian";
  c.params.omega_sq = 1.0;
  ScenarioRuntime rt = build_runtime(c);
  const double w = 2.0 / 0.5;  // 2 sqrt(omega_sq) / theta1
  CHECK(rt.cfg->params.mass_sq == Catch::Approx(-2.0 * w));
  CHECK(rt.cfg->params.exploratory);
  c.params.omega_sq = 0.0;
  CHECK_THROWS_AS(build_runtime(c), ScenarioError);
}

TEST_CASE("field snapshots round-trip through json") {
  BoxGrid g(2, 3.0, 24, 4);
  ScalarField f = random_damped_field(g, 7);
  ScalarField back = field_from_json(field_to_json(f), g);
  CHECK(field_norm(f - back) == 0.0);
  BoxGrid other(2, 3.0, 32, 4);
  CHECK_THROWS_AS(field_from_json(field_to_json(f), other), IoError);
}

TEST_CASE("field-file twist family loads and validates") {
  ScenarioConfig c;
  c.points = 24;
  c.margin = 4;
  c.twist_family = "field-file";
  c.twist_files = {"tw0.json"};  // one file short of dim
  CHECK_THROWS_AS(build_runtime(c, "/tmp"), ScenarioError);
  BoxGrid g = make_grid(c);
  auto phis = sinusoidal_twist_family(g, 0.1, 2.0);
  for (int a = 0; a < 2; ++a) {
    std::ofstream os("/tmp/scn_tw" + std::to_string(a) + ".json");
    os << field_to_json(phis[a]).dump();
  }
  c.twist_files = {"scn_tw0.json", "scn_tw1.json"};
  ScenarioRuntime rt = build_runtime(c, "/tmp");
  CHECK_FALSE(rt.cfg->vielbein.is_identity_twist());
}

TEST_CASE("suite driver honors the suite selection under all") {
  ScenarioConfig c;
  c.suites = {"verify"};
  ScenarioRuntime rt = build_runtime(c);
  RunReport rep = run_suites(c, *rt.cfg, "all");
  REQUIRE(rep.suites.size() == 1);
  CHECK(rep.suites[0].suite == "verify");
  // an explicit subcommand runs even when unselected
  RunReport conv = run_suites(c, *rt.cfg, "converge");
  REQUIRE(conv.suites.size() == 1);
  CHECK(conv.suites[0].suite == "converge");
  CHECK_THROWS_AS(run_suites(c, *rt.cfg, "bogus"), ScenarioError);
}

TEST_CASE("reports are deterministic and fingerprinted") {
  ScenarioConfig c;
  c.suites = {"verify"};
  ScenarioRuntime rt = build_runtime(c);
  RunReport a = run_suites(c, *rt.cfg, "verify");
  RunReport b = run_suites(c, *rt.cfg, "verify");
  CHECK(report_to_json(a).dump() == report_to_json(b).dump());
  CHECK(a.config_fingerprint.size() == 16);
  ScenarioConfig c2 = c;
  c2.theta_blocks = {0.4};
  CHECK(fingerprint(scenario_to_json(c2)) != a.config_fingerprint);
}
