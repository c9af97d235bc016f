#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"
#include "twistar/currents.hpp"

using namespace twistar;

namespace {

Configuration make_cfg(const BoxGrid& g, ScalarField phi, GWParams p,
                       double th = 0.5, bool twisted = false,
                       StarConfig tmpl = {}) {
  ThetaMatrix theta = ThetaMatrix::block_diagonal(std::vector<double>{th});
  Vielbein v = twisted ? build_vielbein(tt::sinusoidal_twist(g))
                       : Vielbein::identity(g);
  return Configuration(std::move(phi), std::move(theta), std::move(v), p, tmpl);
}

// harmonic-oscillator profile that sits near the stationary point of the
// free harmonic action at trivial twist
Configuration onshell_gaussian(const BoxGrid& g, double omega, double th) {
  const double w = 2.0 * std::sqrt(omega * omega) / th;
  GWParams p;
  p.omega_sq = omega * omega;
  p.mass_sq = -g.dim() * w;
  p.exploratory = true;
  ScalarField phi = sample(g, [&](std::span<const double> x) {
    double r2 = 0.0;
    for (double xi : x) r2 += xi * xi;
    return cplx(std::exp(-0.5 * w * r2), 0.0);
  });
  return make_cfg(g, std::move(phi), p, th);
}

}  // namespace

TEST_CASE("tensor field shape and divergence bookkeeping") {
  BoxGrid g = tt::desk_grid(32);
  TensorField t(g, 2);
  CHECK(t.comps.size() == 4);
  t.at(0, 1) = coordinate_field(g, 0);
  TensorField d = divergence(t, g);
  CHECK(d.comps.size() == 2);
  // d_sigma t^{sigma}{}_1 = d_0 x_0 = 1
  CHECK(field_norm(d.at(1) - constant_field(g, 1.0)) < 1e-12);
  CHECK(field_norm(d.at(0)) < 1e-12);
}

TEST_CASE("currents vanish on the vacuum") {
  BoxGrid g = tt::desk_grid(32);
  GWParams p{0.9, 1.5, 0.6};
  Configuration vac = make_cfg(g, ScalarField(g), p);
  ScalarField dphi = tt::random_damped(g, 70);
  CHECK(K_current(vac, dphi).norm() < 1e-12);
  std::vector<ScalarField> dxt = {tt::random_damped(g, 71),
                                  tt::random_damped(g, 72)};
  CHECK(R_current(vac, dxt).norm() < 1e-12);
  // the energy-momentum tensor of the vacuum cancels between the constant
  // frame-kinetic density and its transport term in D=2
  CHECK(emt(vac).norm() < 1e-10);
}

TEST_CASE("commutative limit: canonical energy-momentum tensor") {
  BoxGrid g = tt::desk_grid();
  GWParams p{0.7, 1.1, 0.4};
  StarConfig tmpl;
  tmpl.commutative = true;
  Configuration c = make_cfg(g, tt::gaussian(g, 1.0), p, 0.5, false, tmpl);
  TensorField t = emt(c);
  ScalarField L = lagrangian_density(c);
  for (int m = 0; m < 2; ++m)
    for (int nu = 0; nu < 2; ++nu) {
      ScalarField want = partial(c.phi, nu) * partial(c.phi, m);
      if (m == nu) want += constant_field(g, 1.0) - L;
      want *= -1.0;  // overall sign of the variational convention
      CHECK(field_norm(t.at(m, nu) - want) <
            1e-10 * std::max(1.0, field_norm(want)));
    }
}

TEST_CASE("commutative limit: orbital relation between amt and emt") {
  BoxGrid g = tt::desk_grid();
  GWParams p{0.7, 1.1, 0.4};
  StarConfig tmpl;
  tmpl.commutative = true;
  Configuration c = make_cfg(g, tt::gaussian(g, 1.0), p, 0.5, false, tmpl);
  TensorField m3 = amt(c);
  TensorField t2 = emt(c);
  // all star-correction terms drop, leaving M^mu_{nu rho} =
  // -(1/2)(x_nu T^mu_rho - x_rho T^mu_nu)
  for (int m = 0; m < 2; ++m) {
    ScalarField want = coordinate_field(g, 0) * t2.at(m, 1) -
                       coordinate_field(g, 1) * t2.at(m, 0);
    want *= -0.5;
    CHECK(field_norm(m3.at(m, 0, 1) - want) <
          1e-10 * std::max(1.0, field_norm(want)));
    CHECK(field_norm(m3.at(m, 0, 1) + m3.at(m, 1, 0)) < 1e-14);
  }
}

TEST_CASE("commutative limit with omega off: pure transport dilatation") {
  BoxGrid g = tt::desk_grid();
  GWParams p{0.7, 1.1, 0.0};
  StarConfig tmpl;
  tmpl.commutative = true;
  Configuration c = make_cfg(g, tt::gaussian(g, 1.0), p, 0.5, false, tmpl);
  TensorField d = dilatation_current(c);
  ScalarField L = lagrangian_density(c);
  for (int m = 0; m < 2; ++m) {
    ScalarField want = coordinate_field(g, m) * L;
    want *= -2.0;
    CHECK(field_norm(d.at(m) - want) < 1e-12 * std::max(1.0, field_norm(want)));
  }
}

TEST_CASE("two assembly routes of the twist-scalar current") {
  BoxGrid g = tt::desk_grid();
  std::vector<ScalarField> dphic = {
      tt::gaussian(g, 1.3, 0.7, std::vector<double>{0.8, 0.2}),
      tt::gaussian(g, 1.2, 0.6, std::vector<double>{-0.5, 0.6})};
  auto route_gap = [&](const Configuration& c) {
    TensorField a = J_current_pieces(c, dphic);
    TensorField b = J_current_combined(c, dphic);
    TensorField da = divergence(a, g, c.star.stencil);
    TensorField db = divergence(b, g, c.star.stencil);
    return std::abs(integrate(da.at(0)) - integrate(db.at(0)));
  };
  {
    // trivial twist: every rearrangement used by the combined route closes
    GWParams p{0.8, 1.2, 0.5};
    Configuration c = make_cfg(g, tt::gaussian(g, 1.0), p, 0.4, false);
    INFO("trivial twist gap " << route_gap(c));
    CHECK(route_gap(c) < 1e-8);
  }
  {
    // general twist with the harmonic coupling off
    GWParams p{0.8, 1.2, 0.0};
    Configuration c = make_cfg(g, tt::gaussian(g, 1.0), p, 0.4, true);
    INFO("general twist gap " << route_gap(c));
    CHECK(route_gap(c) < 1e-8);
  }
}

TEST_CASE("variation bookkeeping: translation and rotation") {
  BoxGrid g = tt::desk_grid();
  GWParams p{0.8, 1.2, 0.5};
  Configuration c = make_cfg(g, tt::gaussian(g, 1.0, 1.0,
                                             std::vector<double>{0.4, -0.3}),
                             p, 0.4, false);
  {
    VariationField v = translation_variation(c, 0);
    BookkeepingResult r = noether_bookkeeping(c, v);
    INFO("translation direct " << r.direct << " surrogate " << r.surrogate);
    CHECK(r.defect < 1e-5);
  }
  {
    VariationField v = rotation_variation(c, 0, 1);
    BookkeepingResult r = noether_bookkeeping(c, v);
    INFO("rotation direct " << r.direct << " surrogate " << r.surrogate);
    CHECK(r.defect < 1e-5);
  }
}

TEST_CASE("fixed harmonic background breaks translation invariance") {
  BoxGrid g = tt::desk_grid();
  GWParams p{0.8, 0.0, 0.5};
  Configuration c = make_cfg(g, tt::gaussian(g, 1.0, 1.0,
                                             std::vector<double>{0.4, -0.3}),
                             p, 0.4, false);
  // transported background: the response is a pure boundary term
  VariationField cov = translation_variation(c, 0, true);
  BookkeepingResult rc = noether_bookkeeping(c, cov);
  // fixed background: both routes agree on a value far above that floor
  VariationField fix = translation_variation(c, 0, false);
  BookkeepingResult rf = noether_bookkeeping(c, fix);
  INFO("covariant " << rc.direct << " fixed " << rf.direct << " surrogate "
                    << rf.surrogate);
  CHECK(rf.defect < 1e-5);
  CHECK(std::abs(rf.direct) > 100.0 * std::abs(rc.direct));
}

TEST_CASE("variation bookkeeping: parity") {
  BoxGrid g = tt::desk_grid(48);
  GWParams p{0.6, 1.2, 0.4};
  ScalarField phi = tt::gaussian(g, 1.0, 1.0, std::vector<double>{0.5, -0.2});
  Configuration c = make_cfg(g, std::move(phi), p, 0.5, true);
  CHECK(parity_bookkeeping_defect(c) < 1e-9);
}

TEST_CASE("conservation report plumbing and near-on-shell conservation") {
  BoxGrid g = tt::desk_grid();
  Configuration c = onshell_gaussian(g, 1.0, 2.0);
  const double scale =
      std::max(1.0, field_norm(lagrangian_density(c)));
  CHECK(field_norm(e_phi_residual(c)) < 1e-3 * scale);

  ConservationReport rep = conservation_report(c, "emt");
  CHECK(rep.current == "emt");
  CHECK(rep.per_index.size() == 2);
  double sum = 0.0;
  for (const auto& [k, v] : rep.breakdown) sum += v;
  CHECK(std::abs(sum - rep.total) < 1e-10 * std::max(1.0, rep.total));
  INFO("aggregate " << rep.aggregate << " total " << rep.total);
  CHECK(rep.aggregate <= rep.total * (1.0 + 1e-12) + 1e-12);
}

TEST_CASE("harmonic term leaves its signature in the dilatation divergence") {
  BoxGrid g = tt::desk_grid();
  Configuration c_on = onshell_gaussian(g, 1.0, 2.0);
  GWParams p_off = c_on.params;
  p_off.omega_sq = 0.0;
  Configuration c_off = make_cfg(g, c_on.phi, p_off, 2.0);
  ConservationReport on = conservation_report(c_on, "dc");
  ConservationReport off = conservation_report(c_off, "dc");
  INFO("on " << on.breakdown.at("harmonic") << " off "
             << off.breakdown.at("harmonic"));
  CHECK(on.breakdown.at("harmonic") > 10.0 * off.breakdown.at("harmonic"));
}

TEST_CASE("simplified forms drop only boundary flux") {
  BoxGrid g = tt::desk_grid();
  GWParams p{0.8, 1.2, 0.5};
  Configuration c = make_cfg(g, tt::gaussian(g, 1.0), p, 0.4, false);
  auto signed_div_gap = [&](const TensorField& a, const TensorField& b) {
    TensorField da = divergence(a, g, c.star.stencil);
    TensorField db = divergence(b, g, c.star.stencil);
    double m = 0.0;
    for (size_t i = 0; i < da.comps.size(); ++i)
      m = std::max(m, std::abs(integrate(da.comps[i]) -
                               integrate(db.comps[i])));
    return m;
  };
  const double ge = signed_div_gap(emt(c), emt_simplified(c));
  const double ga = signed_div_gap(amt(c), amt_simplified(c));
  const double gd =
      signed_div_gap(dilatation_current(c), dc_simplified(c));
  INFO("emt " << ge << " amt " << ga << " dc " << gd);
  CHECK(ge < 1e-8);
  CHECK(ga < 1e-7);
  CHECK(gd < 1e-7);
}
