#pragma once

// Field and matrix serialization: JSON snapshots of scalar fields and CSV
// matrices (header row, comma delimiter, '.' decimal) for tensor slices.

#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

#include "twistar/currents.hpp"

namespace twistar {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using json = nlohmann::json;

inline std::string format_double(double v) {
  // shortest representation that round-trips, stable across runs
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline json field_to_json(const ScalarField& f) {
  const BoxGrid& g = f.grid();
  json j;
  j["grid"] = {{"dim", g.dim()},
               {"half_width", g.half_width()},
               {"points", g.points_per_axis()},
               {"margin", g.margin()}};
  json re = json::array(), im = json::array();
  for (std::int64_t i = 0; i < f.size(); ++i) {
    re.push_back(f[i].real());
    im.push_back(f[i].imag());
  }
  j["re"] = std::move(re);
  j["im"] = std::move(im);
  return j;
}

inline ScalarField field_from_json(const json& j, const BoxGrid& g) {
  if (j.at("grid").at("points").get<int>() != g.points_per_axis() ||
      j.at("grid").at("dim").get<int>() != g.dim())
    throw IoError("field snapshot does not match the grid");
  ScalarField f(g);
  const auto& re = j.at("re");
  const auto& im = j.at("im");
  if (std::int64_t(re.size()) != f.size() ||
      std::int64_t(im.size()) != f.size())
    throw IoError("field snapshot has the wrong number of values");
  for (std::int64_t i = 0; i < f.size(); ++i)
    f[i] = cplx(re[i].get<double>(), im[i].get<double>());
  return f;
}

// one grid-shaped matrix per call: rows along axis 0, columns along axis 1
inline void write_field_csv(std::ostream& os, const ScalarField& f,
                            bool imag_part = false) {
  const BoxGrid& g = f.grid();
  if (g.dim() != 2) throw IoError("CSV slices are 2-D only");
  const int n = g.points_per_axis();
  os << "x\\y";
  for (int j = 0; j < n; ++j) os << ',' << format_double(g.coord(j, 1));
  os << '\n';
  std::vector<int> mi(2);
  for (int i = 0; i < n; ++i) {
    os << format_double(g.coord(i, 0));
    for (int j = 0; j < n; ++j) {
      mi[0] = i;
      mi[1] = j;
      const cplx v = f[g.linear(mi)];
      os << ',' << format_double(imag_part ? v.imag() : v.real());
    }
    os << '\n';
  }
}

inline void write_field_csv(const std::string& path, const ScalarField& f,
                            bool imag_part = false) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path);
  write_field_csv(os, f, imag_part);
}

// one CSV file per tensor component, suffixed with the index labels
inline void write_tensor_csv(const std::string& prefix, const TensorField& t) {
  std::vector<int> idx(t.rank, 0);
  for (size_t lin = 0; lin < t.comps.size(); ++lin) {
    size_t rest = lin;
    for (int r = t.rank - 1; r >= 0; --r) {
      idx[r] = int(rest % t.D);
      rest /= t.D;
    }
    std::string name = prefix;
    for (int r = 0; r < t.rank; ++r) name += "_" + std::to_string(idx[r]);
    write_field_csv(name + ".csv", t.comps[lin]);
  }
}

}  // namespace twistar
