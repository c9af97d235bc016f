// Scenario runner: parse a config, build the runtime configuration, run the
// selected check suites, and emit a JSON report plus an aligned text summary.
// Reports are bit-identical across reruns of the same config on the same
// build; wall-clock timing goes to a separate artifact.
//
// Exit codes: 0 all selected suites pass, 1 suite failure, 2 config error,
// 3 degenerate frame.

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "twistar/suites.hpp"

namespace {

namespace fs = std::filesystem;
using namespace twistar;

void emit_diagnostic(const std::string& kind, const std::string& detail) {
  json d;
  d["error"] = kind;
  d["detail"] = detail;
  std::cerr << d.dump(2) << "\n";
}

void write_artifacts(const fs::path& out, const ScenarioConfig& sc,
                     const Configuration& cfg, const RunReport& rep,
                     double elapsed_s) {
  fs::create_directories(out);
  const bool want_json =
      std::find(sc.output_formats.begin(), sc.output_formats.end(), "json") !=
      sc.output_formats.end();
  const bool want_text =
      std::find(sc.output_formats.begin(), sc.output_formats.end(), "text") !=
      sc.output_formats.end();
  if (want_json) {
    std::ofstream os(out / "report.json");
    os << report_to_json(rep).dump(2) << "\n";
  }
  if (want_text) {
    std::ofstream os(out / "report.txt");
    write_report_text(os, rep);
  }
  {
    std::ofstream os(out / "timing.txt");
    os << "elapsed_seconds " << elapsed_s << "\n";
  }
  if (sc.csv_slices && cfg.grid().dim() == 2) {
    write_field_csv((out / "phi_re.csv").string(), cfg.phi);
    for (int a = 0; a < cfg.dim(); ++a)
      write_field_csv((out / ("twist_phi" + std::to_string(a) + ".csv")).string(),
                      cfg.vielbein.phi(a));
  }
}

void write_converge_csv(const fs::path& out, const SuiteContext& ctx) {
  const std::vector<int> orders = {1, 2, 3};
  const std::vector<double> scales = {1.0, 0.5, 0.25};
  auto rows = converge_table(ctx, orders, scales);
  std::ofstream os(out / "converge_table.csv");
  os << "truncation,theta_scale,assoc_defect,leibniz_defect\n";
  for (const auto& r : rows)
    os << r.truncation << ',' << format_double(r.scale) << ','
       << format_double(r.assoc_defect) << ','
       << format_double(r.leibniz_defect) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"twisted star-product engine: scenario runner"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  int seed = -1;

  std::vector<CLI::App*> subs;
  for (const char* name :
       {"verify", "residuals", "currents", "conserve", "converge", "all"}) {
    CLI::App* s = app.add_subcommand(name);
    s->add_option("--config", config_path, "scenario config (JSON)")
        ->required();
    s->add_option("--out", out_dir, "output directory");
    s->add_option("--seed", seed, "override the field seed");
    subs.push_back(s);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  const std::string subcommand = app.get_subcommands().front()->get_name();

  ScenarioConfig sc;
  try {
    sc = load_scenario(config_path);
    if (seed >= 0) sc.field_seed = static_cast<unsigned>(seed);
  } catch (const std::exception& e) {
    emit_diagnostic("config-parse", e.what());
    return 2;
  }

  try {
    const std::string base =
        fs::path(config_path).parent_path().string();
    ScenarioRuntime rt = build_runtime(sc, base.empty() ? "." : base);
    SuiteContext ctx{sc, *rt.cfg};

    const auto t0 = std::chrono::steady_clock::now();
    RunReport rep = run_suites(sc, *rt.cfg, subcommand);
    const auto t1 = std::chrono::steady_clock::now();
    const double elapsed = std::chrono::duration<double>(t1 - t0).count();

    const fs::path out(out_dir);
    write_artifacts(out, sc, *rt.cfg, rep, elapsed);
    if (subcommand == "converge" || subcommand == "all")
      if (std::find(sc.suites.begin(), sc.suites.end(), "converge") !=
              sc.suites.end() ||
          subcommand == "converge")
        write_converge_csv(out, ctx);

    write_report_text(std::cout, rep);
    return rep.pass() ? 0 : 1;
  } catch (const DegenerateFrame& e) {
    emit_diagnostic("degenerate-frame", e.what());
    return 3;
  } catch (const std::exception& e) {
    emit_diagnostic("config-parse", e.what());
    return 2;
  }
}
