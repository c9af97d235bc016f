#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"
#include "twistar/oracle.hpp"

using namespace twistar;

namespace {

std::vector<std::int64_t> random_interior(const BoxGrid& g, int count,
                                          unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> pick(g.margin(),
                                          g.points_per_axis() - 1 - g.margin());
  std::vector<std::int64_t> pts;
  std::vector<int> mi(g.dim());
  for (int k = 0; k < count; ++k) {
    for (int& v : mi) v = pick(rng);
    pts.push_back(g.linear(mi));
  }
  return pts;
}

}  // namespace

TEST_CASE("local order-6 stencil: exact on cubics, close on gaussians") {
  BoxGrid g = tt::desk_grid(48);
  ScalarField cubic = sample(g, [](std::span<const double> x) {
    return cplx(x[0] * x[0] * x[0] - 2.0 * x[0] * x[1], 0.0);
  });
  ScalarField d = oracle_detail::partial6(cubic, 0);
  ScalarField want = sample(g, [](std::span<const double> x) {
    return cplx(3.0 * x[0] * x[0] - 2.0 * x[1], 0.0);
  });
  CHECK(field_norm(d - want) < 1e-11 * field_norm(want));

  ScalarField f = tt::gaussian(g, 1.0);
  ScalarField df = oracle_detail::partial6(f, 1);
  ScalarField wantg = sample(g, [](std::span<const double> x) {
    double r2 = x[0] * x[0] + x[1] * x[1];
    return cplx(-x[1] * std::exp(-r2 / 2.0), 0.0);
  });
  CHECK(field_norm(df - wantg) < 1e-3);
}

TEST_CASE("star_direct: unit law at sample points") {
  BoxGrid g = tt::desk_grid();
  ThetaMatrix theta = ThetaMatrix::block_diagonal(std::vector<double>{0.5});
  Vielbein v = build_vielbein(tt::sinusoidal_twist(g));
  StarConfig cfg;
  cfg.theta = &theta;
  cfg.vielbein = &v;
  ScalarField f = tt::random_damped(g, 50);
  ScalarField one = constant_field(g, 1.0);
  auto pts = random_interior(g, 20, 7);
  OracleResult r = star_direct(cfg, f, one, pts);
  CHECK(r.method == "direct-multiindex");
  for (size_t k = 0; k < pts.size(); ++k)
    CHECK(std::abs(r.values[k] - f[pts[k]]) < 1e-12);
}

TEST_CASE("polynomial closed forms reproduced by both implementations") {
  BoxGrid g(2, 2.0, 48, 6);
  ThetaMatrix theta = ThetaMatrix::block_diagonal(std::vector<double>{0.5});
  Vielbein v = Vielbein::identity(g);
  StarConfig cfg;
  cfg.theta = &theta;
  cfg.vielbein = &v;
  auto pts = random_interior(g, 20, 8);
  std::vector<double> x(2);
  std::vector<int> mi(2);
  for (const PolyFixture& fix : poly_star_table(theta)) {
    INFO(fix.name);
    ScalarField f = sample(g, fix.f);
    ScalarField gg = sample(g, fix.g);
    ScalarField main = star(cfg, f, gg);
    OracleResult direct = star_direct(cfg, f, gg, pts);
    for (size_t k = 0; k < pts.size(); ++k) {
      g.unravel(pts[k], mi);
      for (int a = 0; a < 2; ++a) x[a] = g.coord(mi[a], a);
      cplx want = fix.expect(x);
      const double tol = 1e-9 * std::max(1.0, std::abs(want));
      CHECK(std::abs(main[pts[k]] - want) < tol);
      CHECK(std::abs(direct.values[k] - want) < tol);
    }
  }
}

TEST_CASE("dual implementation agreement on damped random fields") {
  // finer spacing so the order-6/order-8 stencil gap sits below 1e-8
  BoxGrid g(2, 3.2, 128, 6);
  ThetaMatrix theta = ThetaMatrix::block_diagonal(std::vector<double>{0.3});
  Vielbein v = build_vielbein(tt::sinusoidal_twist(g, 0.05));
  StarConfig cfg;
  cfg.theta = &theta;
  cfg.vielbein = &v;
  ScalarField f = tt::gaussian(g, 1.0);
  ScalarField h = tt::gaussian(g, 1.1, 1.0, std::vector<double>{0.4, -0.3});
  ScalarField main = star(cfg, f, h);
  auto pts = random_interior(g, 100, 9);
  OracleResult direct = star_direct(cfg, f, h, pts);
  double worst = 0.0;
  for (size_t k = 0; k < pts.size(); ++k)
    worst = std::max(worst, std::abs(main[pts[k]] - direct.values[k]));
  INFO("worst gap " << worst);
  CHECK(worst < 1e-8);
}

TEST_CASE("commutative residual: zero field, analytic gaussian") {
  BoxGrid g = tt::desk_grid();
  ThetaMatrix theta = ThetaMatrix::block_diagonal(std::vector<double>{0.5});
  CHECK(field_norm(commutative_residual(ScalarField(g), 1.0, 0.5, 0.3, theta)) ==
        0.0);

  const double m2 = 0.7, lambda = 1.3, omega2 = 0.2;
  ScalarField phi = tt::gaussian(g, 1.0);
  ScalarField got = commutative_residual(phi, m2, lambda, omega2, theta);
  ScalarField want = sample(g, [&](std::span<const double> x) {
    const double r2 = x[0] * x[0] + x[1] * x[1];
    const double p = std::exp(-r2 / 2.0);
    const double box = (r2 - 2.0) * p;
    // xt = 2 Theta^{-1} x has |xt|^2 = 4 r^2 / theta1^2
    const double xt2 = 4.0 * r2 / (0.5 * 0.5);
    return cplx(-box + (m2 + omega2 * xt2) * p + lambda / 6.0 * p * p * p, 0.0);
  });
  CHECK(field_norm(got - want) < 1e-3);
}
