// Acceptance gate: one pass/fail line per criterion, exit 0 iff all pass.
// Criteria 1-15 run in-process on the default desk-scale scenario (2-D,
// 64^2 grid, truncation 4, order-8 stencil); criterion 16 invokes the CLI
// runner twice on a bundled config and byte-compares the JSON reports.
//
// Usage: acceptance <path-to-cli> <path-to-config>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "twistar/suites.hpp"

using namespace twistar;

namespace {

int failures = 0;

void line(int num, const std::string& title, bool pass,
          const std::string& detail) {
  if (!pass) ++failures;
  std::printf("C%02d %-38s %s  %s\n", num, title.c_str(),
              pass ? "PASS" : "FAIL", detail.c_str());
}

const CheckResult* find_check(const RunReport& rep, const std::string& suite,
                              const std::string& name) {
  for (const auto& s : rep.suites) {
    if (s.suite != suite) continue;
    for (const auto& c : s.checks)
      if (c.name == name) return &c;
  }
  return nullptr;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(2) << v;
  return os.str();
}

// criterion from one or more report checks: pass iff all pass
void from_checks(const RunReport& rep, int num, const std::string& title,
                 const std::vector<std::pair<std::string, std::string>>& refs,
                 const std::string& extra_note = "") {
  bool pass = true;
  std::string detail;
  for (const auto& [suite, name] : refs) {
    const CheckResult* c = find_check(rep, suite, name);
    if (!c) {
      pass = false;
      detail += name + " missing; ";
      continue;
    }
    pass = pass && c->pass;
    if (!detail.empty()) detail += ", ";
    detail += name + "=" + fmt(c->measured) + (c->lower_bound ? ">=" : "<=") +
              fmt(c->tolerance);
  }
  if (!extra_note.empty()) detail += "  [" + extra_note + "]";
  line(num, title, pass, detail);
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: acceptance <cli-binary> <config>\n";
    return 2;
  }
  const std::string cli = argv[1];
  const std::string config = argv[2];

  ScenarioConfig sc;  // desk-scale defaults
  ScenarioRuntime rt = build_runtime(sc);
  RunReport rep = run_suites(sc, *rt.cfg, "all");

  from_checks(rep, 1, "unit law", {{"verify", "unit_law"}});
  from_checks(rep, 2, "coordinate commutator",
              {{"verify", "coordinate_commutator"}});
  from_checks(rep, 3, "flux operator identities",
              {{"verify", "operator_identities"}});
  from_checks(rep, 4, "bracket reality parities", {{"verify", "reality"}});
  from_checks(rep, 5, "truncation convergence order",
              {{"converge", "assoc_slope_N1"},
               {"converge", "assoc_slope_N2"},
               {"converge", "assoc_slope_N3"},
               {"converge", "leibniz_floor_N1"},
               {"converge", "leibniz_floor_N2"},
               {"converge", "leibniz_floor_N3"}},
              "product rule is exact at every truncation order; its defect is "
              "checked against the stencil floor, not a slope");
  from_checks(rep, 6, "trace property",
              {{"verify", "trace_weighted"},
               {"verify", "trace_unweighted_ratio"}});
  from_checks(rep, 7, "harmonic-coordinate identities",
              {{"verify", "xtilde_identities"}});
  from_checks(rep, 8, "vacuum on shell", {{"residuals", "vacuum_onshell"}});
  from_checks(rep, 9, "commutative limit",
              {{"residuals", "commutative_residual"},
               {"currents", "commutative_emt"},
               {"currents", "commutative_amt"}});
  from_checks(rep, 10, "variational decomposition",
              {{"residuals", "decomposition"}});
  from_checks(rep, 11, "variation bookkeeping",
              {{"conserve", "bookkeeping_translation"},
               {"conserve", "bookkeeping_rotation"},
               {"conserve", "bookkeeping_translation_fixed_background"},
               {"conserve", "parity_invariance"}});
  from_checks(rep, 12, "non-conservation signature",
              {{"conserve", "emt_nonconservation"},
               {"conserve", "emt_excess_attribution"},
               {"conserve", "amt_nonconservation"},
               {"conserve", "amt_excess_attribution"}});
  from_checks(rep, 13, "simplified-form equivalence",
              {{"currents", "simplified_forms_damped"},
               {"currents", "simplified_forms_undamped"}});
  from_checks(rep, 14, "parity invariance",
              {{"conserve", "parity_invariance"}});
  from_checks(rep, 15, "independent-implementation agreement",
              {{"verify", "oracle_agreement"},
               {"verify", "oracle_closed_form"}});

  {  // determinism: two full CLI runs must emit byte-identical reports
    const std::string d1 = "acceptance_run1", d2 = "acceptance_run2";
    const std::string base =
        "\"" + cli + "\" all --config \"" + config + "\" --out ";
    int rc1 = std::system((base + d1 + " > /dev/null").c_str());
    int rc2 = std::system((base + d2 + " > /dev/null").c_str());
    const std::string r1 = slurp(d1 + "/report.json");
    const std::string r2 = slurp(d2 + "/report.json");
    const bool pass = rc1 == 0 && rc2 == 0 && !r1.empty() && r1 == r2;
    line(16, "bit-identical reruns", pass,
         "exit " + std::to_string(rc1) + "/" + std::to_string(rc2) + ", " +
             std::to_string(r1.size()) + " bytes" +
             (r1 == r2 ? " identical" : " DIFFER"));
  }

  std::printf("\nacceptance: %d/16 criteria pass\n", 16 - failures);
  return failures == 0 ? 0 : 1;
}
