#pragma once

// Independent verification implementations. Everything here deliberately
// avoids the derivative and series machinery of the main path: stencil
// weights come from a local Vandermonde solve at a different accuracy order,
// the frame is re-derived and re-inverted locally, and the expansion is
// evaluated by explicit multi-index loops without caching.

#include <functional>
#include <string>
#include <vector>

#include "twistar/geometry.hpp"
#include "twistar/grid.hpp"
#include "twistar/star.hpp"

namespace twistar {

struct OracleResult {
  std::vector<cplx> values;
  std::string method;      // direct-multiindex | analytic-commutative |
                           // polynomial-closed-form
  double error_estimate = 0.0;
};

namespace oracle_detail {

inline constexpr int kNodes = 7;  // order-6 window, vs order 8 in the main path

// First-derivative weights for evaluation at node `pos` of kNodes equispaced
// unit-spacing nodes, via the transposed Vandermonde system
//   sum_j w_j (x_j - x_pos)^k = k! delta_{k,1}.
inline std::array<double, kNodes> vandermonde_weights(int pos) {
  constexpr int n = kNodes;
  double m[n][n + 1] = {};
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < n; ++j) {
      double p = 1.0;
      for (int q = 0; q < k; ++q) p *= double(j - pos);
      m[k][j] = p;
    }
    m[k][n] = k == 1 ? 1.0 : 0.0;
  }
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    for (int c = 0; c <= n; ++c) std::swap(m[col][c], m[piv][c]);
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double s = m[r][col] / m[col][col];
      for (int c = col; c <= n; ++c) m[r][c] -= s * m[col][c];
    }
  }
  std::array<double, kNodes> w;
  for (int j = 0; j < n; ++j) w[j] = m[j][n] / m[j][j];
  return w;
}

inline ScalarField partial6(const ScalarField& f, int mu) {
  const BoxGrid& g = f.grid();
  const int n = g.points_per_axis();
  const int hw = kNodes / 2;
  ScalarField out(g);
  std::vector<int> mi(g.dim());
  std::vector<std::array<double, kNodes>> table(kNodes);
  for (int p = 0; p < kNodes; ++p) table[p] = vandermonde_weights(p);
  for (std::int64_t lin = 0; lin < g.size(); ++lin) {
    g.unravel(lin, mi);
    const int i = mi[mu];
    int start = i - hw;
    if (start < 0) start = 0;
    if (start > n - kNodes) start = n - kNodes;
    const auto& w = table[i - start];
    cplx acc = 0.0;
    const std::int64_t base = lin - std::int64_t(i) * g.stride(mu);
    for (int j = 0; j < kNodes; ++j)
      acc += w[j] * f[base + std::int64_t(start + j) * g.stride(mu)];
    out[lin] = acc / g.spacing();
  }
  return out;
}

// Frame e^a_mu and its pointwise inverse, rebuilt from the twist scalars with
// the local stencil and a local elimination.
struct Frame {
  std::vector<ScalarField> inv;  // inv[mu * D + a] = e_a^mu
  int D;
};

inline Frame build_frame(const Vielbein& v) {
  const BoxGrid& g = v.grid();
  const int D = g.dim();
  Frame fr{std::vector<ScalarField>(), D};
  std::vector<ScalarField> e;
  for (int a = 0; a < D; ++a)
    for (int mu = 0; mu < D; ++mu) e.push_back(partial6(v.phi(a), mu));
  for (int k = 0; k < D * D; ++k) fr.inv.emplace_back(g);
  std::vector<cplx> m(D * 2 * D);
  for (std::int64_t lin = 0; lin < g.size(); ++lin) {
    for (int a = 0; a < D; ++a) {
      for (int mu = 0; mu < D; ++mu) {
        m[a * 2 * D + mu] = e[a * D + mu][lin];
        m[a * 2 * D + D + mu] = a == mu ? 1.0 : 0.0;
      }
    }
    for (int col = 0; col < D; ++col) {
      int piv = col;
      for (int r = col + 1; r < D; ++r)
        if (std::abs(m[r * 2 * D + col]) > std::abs(m[piv * 2 * D + col]))
          piv = r;
      for (int c = 0; c < 2 * D; ++c)
        std::swap(m[col * 2 * D + c], m[piv * 2 * D + c]);
      for (int r = 0; r < D; ++r) {
        if (r == col) continue;
        const cplx s = m[r * 2 * D + col] / m[col * 2 * D + col];
        for (int c = 0; c < 2 * D; ++c) m[r * 2 * D + c] -= s * m[col * 2 * D + c];
      }
    }
    // solved E X = I with E[a][mu] = e^a_mu, so X[mu][a] = e_a^mu
    for (int a = 0; a < D; ++a)
      for (int mu = 0; mu < D; ++mu)
        fr.inv[mu * D + a][lin] =
            m[mu * 2 * D + D + a] / m[mu * 2 * D + mu];
  }
  return fr;
}

inline ScalarField x_apply6(const Frame& fr, int a, const ScalarField& f) {
  ScalarField out(f.grid());
  for (int mu = 0; mu < fr.D; ++mu) {
    ScalarField d = partial6(f, mu);
    for (std::int64_t i = 0; i < out.size(); ++i)
      out[i] += fr.inv[mu * fr.D + a][i] * d[i];
  }
  return out;
}

inline double fact(int n) {
  double r = 1.0;
  for (int k = 2; k <= n; ++k) r *= k;
  return r;
}

}  // namespace oracle_detail

// Second star implementation: explicit loops over all index tuples
// (a1..an, b1..bn), fresh derivative chains, no caching.
inline OracleResult star_direct(const StarConfig& cfg, const ScalarField& f,
                                const ScalarField& g,
                                std::span<const std::int64_t> points) {
  using namespace oracle_detail;
  check_star_cfg(cfg);
  const BoxGrid& grid = cfg.grid();
  const int D = grid.dim();
  const int N = cfg.truncation_order;
  Frame fr = build_frame(*cfg.vielbein);

  OracleResult res;
  res.method = "direct-multiindex";
  res.values.assign(points.size(), cplx(0.0, 0.0));
  for (size_t k = 0; k < points.size(); ++k)
    res.values[k] = f[points[k]] * g[points[k]];

  const cplx half_i(0.0, 0.5);
  std::vector<int> tup;
  for (int n = 1; n <= N; ++n) {
    // all D^n chains for each side, rebuilt in place
    const std::int64_t count = [&] {
      std::int64_t c = 1;
      for (int q = 0; q < n; ++q) c *= D;
      return c;
    }();
    std::vector<std::vector<int>> tuples;
    tup.assign(n, 0);
    for (std::int64_t t = 0; t < count; ++t) {
      tuples.push_back(tup);
      for (int q = n - 1; q >= 0; --q) {
        if (++tup[q] < D) break;
        tup[q] = 0;
      }
    }
    auto chain = [&](const ScalarField& base, const std::vector<int>& idx) {
      ScalarField cur = base;
      for (int q = n - 1; q >= 0; --q) cur = x_apply6(fr, idx[q], cur);
      return cur;
    };
    cplx pref = 1.0;
    for (int q = 0; q < n; ++q) pref *= half_i;
    pref /= fact(n);
    for (const auto& at : tuples) {
      ScalarField cf = chain(f, at);
      for (const auto& bt : tuples) {
        double tw = 1.0;
        for (int q = 0; q < n; ++q)
          tw *= cfg.theta_scale * cfg.theta->at(at[q], bt[q]);
        if (tw == 0.0) continue;
        ScalarField cg = chain(g, bt);
        for (size_t k = 0; k < points.size(); ++k)
          res.values[k] += pref * tw * cf[points[k]] * cg[points[k]];
      }
    }
  }
  res.error_estimate = std::pow(grid.spacing(), kNodes - 1);
  return res;
}

// Commutative field-equation residual
//   -box phi + m^2 phi + (lambda/6) phi^3 + Omega^2 |xt|^2 phi
// built from the local stencil only.
inline ScalarField commutative_residual(const ScalarField& phi, double m2,
                                        double lambda, double omega2,
                                        const ThetaMatrix& theta) {
  using namespace oracle_detail;
  const BoxGrid& g = phi.grid();
  ScalarField out(g);
  for (int mu = 0; mu < g.dim(); ++mu) {
    ScalarField d2 = partial6(partial6(phi, mu), mu);
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] -= d2[i];
  }
  auto xt = xtilde_coords(theta, g);
  for (std::int64_t i = 0; i < out.size(); ++i) {
    cplx r2 = 0.0;
    for (int mu = 0; mu < g.dim(); ++mu) r2 += xt[mu][i] * xt[mu][i];
    out[i] += (m2 + omega2 * r2) * phi[i] +
              (lambda / 6.0) * phi[i] * phi[i] * phi[i];
  }
  return out;
}

// Exact closed forms for polynomial inputs at the trivial twist; the series
// terminates, so any truncation order >= the degree must reproduce these to
// rounding.
struct PolyFixture {
  std::string name;
  std::function<cplx(std::span<const double>)> f, g, expect;
};

inline std::vector<PolyFixture> poly_star_table(const ThetaMatrix& theta) {
  const double th = theta.at(0, 1);
  const double ith0 = theta.inv_at(0, 0), ith1 = theta.inv_at(0, 1);
  std::vector<PolyFixture> t;
  t.push_back({"x1*x1",
               [](std::span<const double> x) { return cplx(x[0] * x[0], 0); },
               [](std::span<const double>) { return cplx(1, 0); },
               [](std::span<const double> x) { return cplx(x[0] * x[0], 0); }});
  t.push_back({"x1*x2",
               [](std::span<const double> x) { return cplx(x[0], 0); },
               [](std::span<const double> x) { return cplx(x[1], 0); },
               [th](std::span<const double> x) {
                 return cplx(x[0] * x[1], 0.5 * th);
               }});
  t.push_back({"x1*(x2)^2",
               [](std::span<const double> x) { return cplx(x[0], 0); },
               [](std::span<const double> x) { return cplx(x[1] * x[1], 0); },
               [th](std::span<const double> x) {
                 return cplx(x[0] * x[1] * x[1], th * x[1]);
               }});
  // xt_1 * f = xt_1 f + i d_1 f with f = x^1 x^2
  t.push_back({"xt1*poly",
               [ith0, ith1](std::span<const double> x) {
                 return cplx(2.0 * (ith0 * x[0] + ith1 * x[1]), 0);
               },
               [](std::span<const double> x) { return cplx(x[0] * x[1], 0); },
               [ith0, ith1](std::span<const double> x) {
                 const double xt = 2.0 * (ith0 * x[0] + ith1 * x[1]);
                 return cplx(xt * x[0] * x[1], x[1]);
               }});
  return t;
}

}  // namespace twistar
