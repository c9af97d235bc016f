#pragma once

// The twisted Grosse-Wulkenhaar model: Lagrangian pieces, action integral,
// field-equation residuals for the scalar and the twist scalars, the on-shell
// decomposition check, and the harmonic constraint.

#include <optional>

#include "twistar/geometry.hpp"
#include "twistar/grid.hpp"
#include "twistar/star.hpp"

namespace twistar {

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GWParams {
  double mass_sq = 0.0;
  double lambda = 0.0;
  double omega_sq = 0.0;
  bool exploratory = false;  // permit negative couplings
};

// Joint state (phi, twist scalars, couplings, star settings). Star-config
// pointers are wired into the owned theta/vielbein, so copies rewire.
struct Configuration {
  ScalarField phi;
  GWParams params;
  ThetaMatrix theta;
  Vielbein vielbein;
  StarConfig star;
  // harmonic coordinates 2 Theta^{-1} x; replaceable for variation bookkeeping
  std::vector<ScalarField> xtilde;

  Configuration(ScalarField phi_, ThetaMatrix theta_, Vielbein vielbein_,
                GWParams params_, StarConfig star_template = {})
      : phi(std::move(phi_)),
        params(params_),
        theta(std::move(theta_)),
        vielbein(std::move(vielbein_)),
        star(star_template) {
    wire();
    if (!phi.grid().same(vielbein.grid()))
      throw ModelError("phi and vielbein live on different grids");
    if (theta.dim() != phi.grid().dim())
      throw ModelError("theta dimension does not match the grid");
    if (!params.exploratory && (params.lambda < 0.0 || params.omega_sq < 0.0))
      throw ModelError("negative couplings need the exploratory flag");
    xtilde = xtilde_coords(theta, phi.grid());
  }

  Configuration(const Configuration& o)
      : phi(o.phi),
        params(o.params),
        theta(o.theta),
        vielbein(o.vielbein),
        star(o.star),
        xtilde(o.xtilde) {
    wire();
  }
  Configuration& operator=(const Configuration&) = delete;

  const BoxGrid& grid() const { return phi.grid(); }
  int dim() const { return grid().dim(); }

 private:
  void wire() {
    star.theta = &theta;
    star.vielbein = &vielbein;
  }
};

enum class Piece { kinetic, mass, quartic, harmonic, twist_kinetic };

inline constexpr std::array<Piece, 5> kAllPieces = {
    Piece::kinetic, Piece::mass, Piece::quartic, Piece::harmonic,
    Piece::twist_kinetic};

inline const char* piece_name(Piece p) {
  switch (p) {
    case Piece::kinetic: return "kinetic";
    case Piece::mass: return "mass";
    case Piece::quartic: return "quartic";
    case Piece::harmonic: return "harmonic";
    case Piece::twist_kinetic: return "twist_kinetic";
  }
  return "?";
}

inline ScalarField lagrangian_piece(const Configuration& c, Piece which) {
  const BoxGrid& g = c.grid();
  const int D = c.dim();
  ScalarField out(g);
  switch (which) {
    case Piece::kinetic:
      for (int mu = 0; mu < D; ++mu) {
        ScalarField d = partial(c.phi, mu, c.star.stencil);
        out += star(c.star, d, d);
      }
      out *= 0.5;
      break;
    case Piece::twist_kinetic:
      for (int a = 0; a < D; ++a)
        for (int mu = 0; mu < D; ++mu) {
          ScalarField d = partial(c.vielbein.phi(a), mu, c.star.stencil);
          out += star(c.star, d, d);
        }
      out *= 0.5;
      break;
    case Piece::mass:
      out = star(c.star, c.phi, c.phi);
      out *= 0.5 * c.params.mass_sq;
      break;
    case Piece::quartic: {
      std::vector<ScalarField> four(4, c.phi);
      out = star_multi(c.star, four);
      out *= c.params.lambda / 24.0;
      break;
    }
    case Piece::harmonic:
      for (int mu = 0; mu < D; ++mu) {
        ScalarField xp = c.xtilde[mu] * c.phi;
        out += star(c.star, xp, xp);
      }
      out *= 0.5 * c.params.omega_sq;
      break;
  }
  return out;
}

inline ScalarField lagrangian_density(const Configuration& c) {
  ScalarField out(c.grid());
  for (Piece p : kAllPieces) out += lagrangian_piece(c, p);
  return out;
}

// S = int e d^Dx (L * e^{-1}), masked rectangle rule.
inline cplx action_value(const Configuration& c) {
  ScalarField weighted =
      star(c.star, lagrangian_density(c), c.vielbein.inv_det());
  return integrate(c.vielbein.det() * weighted);
}

namespace model_detail {

// sum_mu {xt_mu, {e^{-1}, {xt_mu, f}}} with the two harmonic coordinates
// contracted over mu
inline ScalarField harmonic_nest(const Configuration& c,
                                 const ScalarField& f) {
  ScalarField out(c.grid());
  for (int mu = 0; mu < c.dim(); ++mu) {
    ScalarField inner = star_anticommutator(c.star, c.xtilde[mu], f);
    ScalarField mid =
        star_anticommutator(c.star, c.vielbein.inv_det(), inner);
    out += star_anticommutator(c.star, c.xtilde[mu], mid);
  }
  return out;
}

// sum_mu xt_mu . {xt_mu f, e^{-1}} with pointwise harmonic products
inline ScalarField xtilde_dot_brace(const Configuration& c) {
  ScalarField out(c.grid());
  for (int mu = 0; mu < c.dim(); ++mu)
    out += c.xtilde[mu] *
           star_anticommutator(c.star, c.xtilde[mu] * c.phi,
                               c.vielbein.inv_det());
  return out;
}

// sum_mu (X_c xt_mu) . {xt_mu phi, e^{-1}}
inline ScalarField xc_xtilde_dot_brace(const Configuration& c, int cidx) {
  ScalarField out(c.grid());
  for (int mu = 0; mu < c.dim(); ++mu)
    out += X_apply(c.vielbein, cidx, c.xtilde[mu], c.star.stencil) *
           star_anticommutator(c.star, c.xtilde[mu] * c.phi,
                               c.vielbein.inv_det());
  return out;
}

// {phi * phi, {phi, e^{-1}}}
inline ScalarField quartic_nest(const Configuration& c) {
  ScalarField inner =
      star_anticommutator(c.star, c.phi, c.vielbein.inv_det());
  return star_anticommutator(c.star, star(c.star, c.phi, c.phi), inner);
}

// div_sigma of e {d^sigma phi, e^{-1}}, stencil applied to the assembled
// product
inline ScalarField kinetic_divergence(const Configuration& c,
                                      const ScalarField& f) {
  ScalarField out(c.grid());
  for (int sigma = 0; sigma < c.dim(); ++sigma) {
    ScalarField br = star_anticommutator(
        c.star, partial(f, sigma, c.star.stencil), c.vielbein.inv_det());
    out += partial(c.vielbein.det() * br, sigma, c.star.stencil);
  }
  return out;
}

}  // namespace model_detail

inline ScalarField e_phi_residual(const Configuration& c) {
  using namespace model_detail;
  const ScalarField& e = c.vielbein.det();
  ScalarField out = kinetic_divergence(c, c.phi);
  out *= -0.5;
  ScalarField mass =
      star_anticommutator(c.star, c.phi, c.vielbein.inv_det());
  mass *= 0.5 * c.params.mass_sq;
  out += e * mass;
  if (c.params.lambda != 0.0) {
    ScalarField q = quartic_nest(c);
    q *= c.params.lambda / 24.0;
    out += e * q;
  }
  if (c.params.omega_sq != 0.0) {
    ScalarField h = harmonic_nest(c, c.phi);
    h *= c.params.omega_sq / 8.0;
    out += e * h;
  }
  return out;
}

inline ScalarField e_phic_residual(const Configuration& c, int cidx) {
  using namespace model_detail;
  const int D = c.dim();
  const ScalarField& e = c.vielbein.det();
  const ScalarField& einv = c.vielbein.inv_det();
  ScalarField out = X_apply(c.vielbein, cidx, lagrangian_density(c),
                            c.star.stencil);
  out *= -1.0;
  ScalarField kin = kinetic_divergence(c, c.phi);
  out += 0.5 * (X_apply(c.vielbein, cidx, c.phi, c.star.stencil) * kin);
  if (c.params.omega_sq != 0.0) {
    ScalarField h = c.phi * xc_xtilde_dot_brace(c, cidx);
    h *= 0.5 * c.params.omega_sq;
    out += e * h;
  }
  for (int mu = 0; mu < D; ++mu) {
    ScalarField dphi = partial(c.phi, mu, c.star.stencil);
    ScalarField t = X_apply(c.vielbein, cidx, dphi, c.star.stencil) *
                    star_anticommutator(c.star, dphi, einv);
    t *= 0.5;
    out += e * t;
    for (int a = 0; a < D; ++a) {
      ScalarField da = partial(c.vielbein.phi(a), mu, c.star.stencil);
      ScalarField ta = X_apply(c.vielbein, cidx, da, c.star.stencil) *
                       star_anticommutator(c.star, da, einv);
      ta *= 0.5;
      out += e * ta;
    }
  }
  // closing d_mu(e/2 {d^mu phi_c, e^{-1}}) term
  ScalarField close = kinetic_divergence(c, c.vielbein.phi(cidx));
  close *= 0.5;
  out += close;
  return out;
}

// The twist-variation residual written directly from its defining display
// (independent route used by the decomposition check).
inline ScalarField e_phi_phic_direct(const Configuration& c, int cidx) {
  using namespace model_detail;
  const int D = c.dim();
  const ScalarField& e = c.vielbein.det();
  const ScalarField& einv = c.vielbein.inv_det();
  ScalarField inner = X_apply(c.vielbein, cidx, lagrangian_density(c),
                              c.star.stencil);
  inner = einv * inner;  // pointwise 1/e in the bracketed display
  ScalarField xcphi = X_apply(c.vielbein, cidx, c.phi, c.star.stencil);
  ScalarField onshell(c.grid());
  {
    ScalarField m = star_anticommutator(c.star, c.phi, einv);
    m *= 0.5 * c.params.mass_sq;
    onshell += m;
  }
  if (c.params.lambda != 0.0) {
    ScalarField q = quartic_nest(c);
    q *= c.params.lambda / 24.0;
    onshell += q;
  }
  if (c.params.omega_sq != 0.0) {
    ScalarField h = xtilde_dot_brace(c);
    h *= 0.5 * c.params.omega_sq;
    onshell += h;
  }
  inner -= xcphi * onshell;
  if (c.params.omega_sq != 0.0) {
    ScalarField h = c.phi * xc_xtilde_dot_brace(c, cidx);
    h *= 0.5 * c.params.omega_sq;
    inner -= h;
  }
  for (int mu = 0; mu < D; ++mu) {
    ScalarField dphi = partial(c.phi, mu, c.star.stencil);
    ScalarField t = X_apply(c.vielbein, cidx, dphi, c.star.stencil) *
                    star_anticommutator(c.star, dphi, einv);
    t *= 0.5;
    inner -= t;
    for (int a = 0; a < D; ++a) {
      ScalarField da = partial(c.vielbein.phi(a), mu, c.star.stencil);
      ScalarField ta = X_apply(c.vielbein, cidx, da, c.star.stencil) *
                       star_anticommutator(c.star, da, einv);
      ta *= 0.5;
      inner -= ta;
    }
  }
  ScalarField close = kinetic_divergence(c, c.vielbein.phi(cidx));
  close *= 0.5;
  inner -= einv * close;
  return e * inner;
}

// || E_(phi,phi^c) + X_c phi . E_phi + E_phi^c ||, the two sides coming from
// independent code paths.
inline double onshell_decomposition_defect(const Configuration& c, int cidx) {
  ScalarField direct = e_phi_phic_direct(c, cidx);
  ScalarField xcphi = X_apply(c.vielbein, cidx, c.phi, c.star.stencil);
  ScalarField recombined = xcphi * e_phi_residual(c);
  recombined += e_phic_residual(c, cidx);
  return field_norm(direct + recombined);
}

// C_mu = e (Omega^2/8) {phi, {e^{-1}, {xt_mu, phi}}}, one field per mu.
inline std::vector<ScalarField> constraint_residual(const Configuration& c) {
  std::vector<ScalarField> out;
  const ScalarField& e = c.vielbein.det();
  for (int mu = 0; mu < c.dim(); ++mu) {
    ScalarField inner =
        star_anticommutator(c.star, c.xtilde[mu], c.phi);
    ScalarField mid =
        star_anticommutator(c.star, c.vielbein.inv_det(), inner);
    ScalarField cm = star_anticommutator(c.star, c.phi, mid);
    cm *= c.params.omega_sq / 8.0;
    out.push_back(e * cm);
  }
  return out;
}

}  // namespace twistar
