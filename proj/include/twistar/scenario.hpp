#pragma once

// Scenario configs: a versioned JSON schema describing grid, deformation
// matrix, twist family, model parameters, star settings, field family,
// suites, tolerances, and output options; strict validation (unknown keys
// are errors) and construction of the runtime Configuration.

#include <filesystem>
#include <memory>
#include <random>
#include <set>

#include "twistar/io.hpp"

namespace twistar {

struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- analytic field families ----------------------------------------------

inline ScalarField gaussian_field(const BoxGrid& g, double sigma, cplx amp,
                                  std::span<const double> x0 = {}) {
  std::vector<double> c(g.dim(), 0.0);
  for (size_t i = 0; i < x0.size() && i < c.size(); ++i) c[i] = x0[i];
  return sample(g, [&, c, sigma, amp](std::span<const double> x) {
    double r2 = 0.0;
    for (size_t a = 0; a < x.size(); ++a) r2 += (x[a] - c[a]) * (x[a] - c[a]);
    return amp * std::exp(-r2 / (2.0 * sigma * sigma));
  });
}

// gaussian-damped random low-order polynomial; reproducible via seed
inline ScalarField random_damped_field(const BoxGrid& g, unsigned seed,
                                       double sigma = 1.2) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int D = g.dim();
  std::vector<double> c0(D), c1(D), c2(D);
  for (int a = 0; a < D; ++a) {
    c0[a] = u(rng);
    c1[a] = u(rng);
    c2[a] = 0.5 * u(rng);
  }
  const double off = u(rng);
  return sample(g, [=](std::span<const double> x) {
    double p = off, r2 = 0.0;
    for (int a = 0; a < D; ++a) {
      p += c0[a] * x[a] + c1[a] * x[a] * x[a] + c2[a] * x[a] * x[(a + 1) % D];
      r2 += x[a] * x[a];
    }
    return cplx(p * std::exp(-r2 / (2.0 * sigma * sigma)), 0.0);
  });
}

inline std::vector<ScalarField> sinusoidal_twist_family(const BoxGrid& g,
                                                        double amp,
                                                        double env_sigma) {
  std::vector<ScalarField> phis;
  const int D = g.dim();
  for (int a = 0; a < D; ++a) {
    phis.push_back(sample(g, [=](std::span<const double> x) {
      double v = x[a];
      if (a == 0) {
        double r2 = 0.0;
        for (double xi : x) r2 += xi * xi;
        v += amp * std::sin(x[1 % D]) *
             std::exp(-r2 / (2.0 * env_sigma * env_sigma));
      }
      return cplx(v, 0.0);
    }));
  }
  return phis;
}

// ---- tolerance table -------------------------------------------------------

inline std::map<std::string, double> default_tolerances() {
  return {
      {"unit_law", 1e-14},          {"coordinate_commutator", 1e-10},
      {"operator_identities", 1e-12}, {"reality", 1e-12},
      {"slope_band", 0.5},          {"trace_weighted", 1e-6},
      {"trace_ratio", 10.0},        {"xtilde_identities", 1e-10},
      {"vacuum_onshell", 1e-10},    {"commutative_residual", 1e-7},
      {"commutative_tensors", 1e-7}, {"decomposition", 1e-6},
      {"bookkeeping", 1e-5},        {"nonconservation_ratio", 10.0},
      {"simplified_forms", 1e-6},   {"parity", 1e-10},
      {"oracle_agreement", 1e-8},   {"oracle_closed_form", 1e-9},
      {"antisymmetry", 1e-10},      {"two_route", 1e-8},
      {"leibniz_floor", 1e-4},
  };
}

// ---- config ---------------------------------------------------------------

struct ScenarioConfig {
  int schema_version = 1;
  // grid
  int dim = 2;
  double half_width = 6.0;
  int points = 64;
  int margin = 6;
  // theta
  std::vector<double> theta_blocks = {0.5};
  std::vector<double> theta_matrix;  // row-major, overrides blocks if set
  // twist
  std::string twist_family = "identity";  // identity | sinusoidal | field-file
  double twist_amplitude = 0.1;
  double twist_envelope_sigma = 2.0;
  std::vector<std::string> twist_files;
  // params
  GWParams params;
  // star
  int truncation_order = 4;
  double theta_scale = 1.0;
  bool commutative = false;
  bool literal_xb = false;
  int stencil_order = 8;
  // field
  std::string field_family = "zero";  // zero | constant | gaussian |
                                      // random-damped | onshell-gaussian
  double field_sigma = 1.0;
  double field_amplitude = 1.0;
  std::vector<double> field_center;
  unsigned field_seed = 1;
  // suites
  std::vector<std::string> suites = {"verify", "residuals", "currents",
                                     "conserve", "converge"};
  // tolerances
  std::map<std::string, double> tolerances = default_tolerances();
  // output
  std::vector<std::string> output_formats = {"json", "text"};
  bool csv_slices = false;
};

namespace scenario_detail {

inline void require_keys(const json& j, const std::string& where,
                         const std::set<std::string>& allowed) {
  if (!j.is_object())
    throw ScenarioError(where + ": expected an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k))
      throw ScenarioError(where + ": unknown key '" + k + "'");
}

template <class T>
void read(const json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

}  // namespace scenario_detail

inline ScenarioConfig parse_scenario(const json& j) {
  using scenario_detail::read;
  using scenario_detail::require_keys;
  ScenarioConfig c;
  require_keys(j, "scenario",
               {"schema_version", "grid", "theta", "twist", "params", "star",
                "field", "suites", "tolerances", "output"});
  read(j, "schema_version", c.schema_version);
  if (c.schema_version != 1)
    throw ScenarioError("unsupported schema_version " +
                        std::to_string(c.schema_version));
  if (j.contains("grid")) {
    const json& b = j.at("grid");
    require_keys(b, "grid", {"dim", "half_width", "points", "margin"});
    read(b, "dim", c.dim);
    read(b, "half_width", c.half_width);
    read(b, "points", c.points);
    read(b, "margin", c.margin);
  }
  if (j.contains("theta")) {
    const json& b = j.at("theta");
    require_keys(b, "theta", {"blocks", "matrix"});
    if (b.contains("blocks")) c.theta_blocks = b.at("blocks").get<std::vector<double>>();
    if (b.contains("matrix")) c.theta_matrix = b.at("matrix").get<std::vector<double>>();
  }
  if (j.contains("twist")) {
    const json& b = j.at("twist");
    require_keys(b, "twist", {"family", "amplitude", "envelope_sigma", "files"});
    read(b, "family", c.twist_family);
    read(b, "amplitude", c.twist_amplitude);
    read(b, "envelope_sigma", c.twist_envelope_sigma);
    read(b, "files", c.twist_files);
    if (c.twist_family != "identity" && c.twist_family != "sinusoidal" &&
        c.twist_family != "field-file")
      throw ScenarioError("unknown twist family '" + c.twist_family + "'");
  }
  if (j.contains("params")) {
    const json& b = j.at("params");
    require_keys(b, "params", {"mass_sq", "lambda", "omega_sq", "exploratory"});
    read(b, "mass_sq", c.params.mass_sq);
    read(b, "lambda", c.params.lambda);
    read(b, "omega_sq", c.params.omega_sq);
    read(b, "exploratory", c.params.exploratory);
  }
  if (j.contains("star")) {
    const json& b = j.at("star");
    require_keys(b, "star",
                 {"truncation_order", "theta_scale", "commutative",
                  "literal_xb", "stencil_order"});
    read(b, "truncation_order", c.truncation_order);
    read(b, "theta_scale", c.theta_scale);
    read(b, "commutative", c.commutative);
    read(b, "literal_xb", c.literal_xb);
    read(b, "stencil_order", c.stencil_order);
  }
  if (j.contains("field")) {
    const json& b = j.at("field");
    require_keys(b, "field",
                 {"family", "sigma", "amplitude", "center", "seed"});
    read(b, "family", c.field_family);
    read(b, "sigma", c.field_sigma);
    read(b, "amplitude", c.field_amplitude);
    read(b, "center", c.field_center);
    read(b, "seed", c.field_seed);
    static const std::set<std::string> fams = {
        "zero", "constant", "gaussian", "random-damped", "onshell-gaussian"};
    if (!fams.count(c.field_family))
      throw ScenarioError("unknown field family '" + c.field_family + "'");
  }
  if (j.contains("suites")) c.suites = j.at("suites").get<std::vector<std::string>>();
  for (const std::string& s : c.suites)
    if (s != "verify" && s != "residuals" && s != "currents" &&
        s != "conserve" && s != "converge")
      throw ScenarioError("unknown suite '" + s + "'");
  if (j.contains("tolerances")) {
    const json& b = j.at("tolerances");
    if (!b.is_object()) throw ScenarioError("tolerances: expected an object");
    for (const auto& [k, v] : b.items()) {
      if (!c.tolerances.count(k))
        throw ScenarioError("tolerances: unknown key '" + k + "'");
      c.tolerances[k] = v.get<double>();
    }
  }
  if (j.contains("output")) {
    const json& b = j.at("output");
    require_keys(b, "output", {"formats", "csv_slices"});
    read(b, "formats", c.output_formats);
    read(b, "csv_slices", c.csv_slices);
  }
  return c;
}

inline ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ScenarioError("cannot open config " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("config parse error: ") + e.what());
  }
  try {
    return parse_scenario(j);
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("config value error: ") + e.what());
  }
}

// normal form: every field explicit, keys sorted by the serializer
inline json scenario_to_json(const ScenarioConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["grid"] = {{"dim", c.dim},
               {"half_width", c.half_width},
               {"points", c.points},
               {"margin", c.margin}};
  if (!c.theta_matrix.empty())
    j["theta"] = {{"matrix", c.theta_matrix}};
  else
    j["theta"] = {{"blocks", c.theta_blocks}};
  j["twist"] = {{"family", c.twist_family},
                {"amplitude", c.twist_amplitude},
                {"envelope_sigma", c.twist_envelope_sigma},
                {"files", c.twist_files}};
  j["params"] = {{"mass_sq", c.params.mass_sq},
                 {"lambda", c.params.lambda},
                 {"omega_sq", c.params.omega_sq},
                 {"exploratory", c.params.exploratory}};
  j["star"] = {{"truncation_order", c.truncation_order},
               {"theta_scale", c.theta_scale},
               {"commutative", c.commutative},
               {"literal_xb", c.literal_xb},
               {"stencil_order", c.stencil_order}};
  j["field"] = {{"family", c.field_family},
                {"sigma", c.field_sigma},
                {"amplitude", c.field_amplitude},
                {"center", c.field_center},
                {"seed", c.field_seed}};
  j["suites"] = c.suites;
  j["tolerances"] = c.tolerances;
  j["output"] = {{"formats", c.output_formats},
                 {"csv_slices", c.csv_slices}};
  return j;
}

inline BoxGrid make_grid(const ScenarioConfig& c) {
  StencilSpec spec;
  spec.accuracy_order = c.stencil_order;
  return BoxGrid(c.dim, c.half_width, c.points, c.margin, spec);
}

inline ThetaMatrix make_theta(const ScenarioConfig& c) {
  if (!c.theta_matrix.empty()) {
    const int D = c.dim;
    if (int(c.theta_matrix.size()) != D * D)
      throw ScenarioError("theta matrix has the wrong size");
    return ThetaMatrix::general(D, c.theta_matrix);
  }
  if (int(c.theta_blocks.size()) * 2 != c.dim)
    throw ScenarioError("theta blocks do not match the grid dimension");
  return ThetaMatrix::block_diagonal(c.theta_blocks);
}

// the grid is referenced (not owned) by fields and frames, so it needs a
// stable address that outlives the Configuration
inline Configuration build_configuration(const ScenarioConfig& c,
                                         const BoxGrid& g,
                                         const std::string& base_dir = ".") {
  ThetaMatrix theta = make_theta(c);
  StencilSpec spec;
  spec.accuracy_order = c.stencil_order;

  Vielbein v = Vielbein::identity(g);
  if (c.twist_family == "sinusoidal") {
    v = build_vielbein(
        sinusoidal_twist_family(g, c.twist_amplitude, c.twist_envelope_sigma),
        spec);
  } else if (c.twist_family == "field-file") {
    if (int(c.twist_files.size()) != c.dim)
      throw ScenarioError("need one twist file per dimension");
    std::vector<ScalarField> phis;
    for (const std::string& f : c.twist_files) {
      std::ifstream is(std::filesystem::path(base_dir) / f);
      if (!is) throw ScenarioError("cannot open twist file " + f);
      phis.push_back(field_from_json(json::parse(is), g));
    }
    v = build_vielbein(std::move(phis), spec);
  }

  ScalarField phi(g);
  GWParams p = c.params;
  if (c.field_family == "constant") {
    phi = constant_field(g, c.field_amplitude);
  } else if (c.field_family == "gaussian") {
    phi = gaussian_field(g, c.field_sigma, c.field_amplitude, c.field_center);
  } else if (c.field_family == "random-damped") {
    phi = random_damped_field(g, c.field_seed, c.field_sigma);
    phi *= c.field_amplitude;
  } else if (c.field_family == "onshell-gaussian") {
    // width tied to the harmonic coupling; mass tuned to the stationary point
    const double th = c.theta_blocks.empty() ? 1.0 : c.theta_blocks[0];
    const double w = 2.0 * std::sqrt(std::abs(p.omega_sq)) / th;
    if (w <= 0.0)
      throw ScenarioError("onshell-gaussian needs omega_sq > 0");
    p.mass_sq = -c.dim * w;
    p.exploratory = true;
    phi = gaussian_field(g, 1.0 / std::sqrt(w), c.field_amplitude);
  }

  StarConfig tmpl;
  tmpl.stencil = spec;
  tmpl.truncation_order = c.truncation_order;
  tmpl.theta_scale = c.theta_scale;
  tmpl.commutative = c.commutative;
  tmpl.literal_Xb = c.literal_xb;
  return Configuration(std::move(phi), std::move(theta), std::move(v), p,
                       tmpl);
}

struct ScenarioRuntime {
  std::unique_ptr<BoxGrid> grid;
  std::unique_ptr<Configuration> cfg;
};

inline ScenarioRuntime build_runtime(const ScenarioConfig& c,
                                     const std::string& base_dir = ".") {
  ScenarioRuntime rt;
  rt.grid = std::make_unique<BoxGrid>(make_grid(c));
  rt.cfg = std::make_unique<Configuration>(
      build_configuration(c, *rt.grid, base_dir));
  return rt;
}

}  // namespace twistar
