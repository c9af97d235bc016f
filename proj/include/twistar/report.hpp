#pragma once

// Run reports: per-suite check results with measured values vs tolerances,
// a config fingerprint, and deterministic JSON plus aligned-text emission.
// Wall-clock timing is written to a separate artifact so the report itself
// is bit-identical across reruns.

#include "twistar/scenario.hpp"

namespace twistar {

struct CheckResult {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  bool lower_bound = false;  // pass means measured >= tolerance
  std::string note;
};

struct SuiteResult {
  std::string suite;
  std::vector<CheckResult> checks;

  bool pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

struct RunReport {
  int schema_version = 1;
  std::string subcommand;
  std::string config_fingerprint;
  std::vector<SuiteResult> suites;

  bool pass() const {
    for (const auto& s : suites)
      if (!s.pass()) return false;
    return true;
  }
};

inline std::string fingerprint(const json& normal_form) {
  // FNV-1a 64 over the serialized normal form
  const std::string s = normal_form.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

inline json report_to_json(const RunReport& r) {
  json j;
  j["schema_version"] = r.schema_version;
  j["subcommand"] = r.subcommand;
  j["config_fingerprint"] = r.config_fingerprint;
  j["pass"] = r.pass();
  json suites = json::array();
  for (const auto& s : r.suites) {
    json js;
    js["suite"] = s.suite;
    js["pass"] = s.pass();
    json checks = json::array();
    for (const auto& c : s.checks) {
      json jc;
      jc["name"] = c.name;
      jc["measured"] = c.measured;
      jc["tolerance"] = c.tolerance;
      jc["relation"] = c.lower_bound ? ">=" : "<=";
      jc["pass"] = c.pass;
      if (!c.note.empty()) jc["note"] = c.note;
      checks.push_back(std::move(jc));
    }
    js["checks"] = std::move(checks);
    suites.push_back(std::move(js));
  }
  j["suites"] = std::move(suites);
  return j;
}

inline void write_report_text(std::ostream& os, const RunReport& r) {
  os << "run report  (config " << r.config_fingerprint << ", subcommand "
     << r.subcommand << ")\n";
  for (const auto& s : r.suites) {
    os << "\n[" << s.suite << "]  " << (s.pass() ? "PASS" : "FAIL") << "\n";
    for (const auto& c : s.checks) {
      std::ostringstream m;
      m << std::scientific << std::setprecision(3) << c.measured;
      std::ostringstream t;
      t << std::scientific << std::setprecision(3) << c.tolerance;
      os << "  " << (c.pass ? "pass" : "FAIL") << "  " << std::left
         << std::setw(44) << c.name << std::right << std::setw(11) << m.str()
         << "  " << (c.lower_bound ? ">=" : "<=") << "  " << std::setw(11)
         << t.str();
      if (!c.note.empty()) os << "   " << c.note;
      os << "\n";
    }
  }
  os << "\noverall: " << (r.pass() ? "PASS" : "FAIL") << "\n";
}

}  // namespace twistar
