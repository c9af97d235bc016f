#pragma once

// Twist data: the deformation matrix Theta, the noncommutativity scalars
// phi^a, the frame e^a_mu = d_mu phi^a with inverse and determinant, the
// commuting vector fields X_a, and the coordinates xt_mu = 2 Theta^{-1} x.

#include <cmath>
#include <sstream>
#include <vector>

#include "twistar/grid.hpp"

namespace twistar {

struct GeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateFrame : GeometryError {
  using GeometryError::GeometryError;
};

namespace detail {

// Gauss elimination with partial pivoting for small D x D systems.
// Returns determinant; fills inv. Throws on (near-)singular input only if
// det magnitude underflows completely; callers apply their own floor.
inline double invert_small(const std::vector<double>& m, int D,
                           std::vector<double>& inv) {
  std::vector<double> a(m);
  inv.assign(static_cast<size_t>(D) * D, 0.0);
  for (int i = 0; i < D; ++i) inv[i * D + i] = 1.0;
  double det = 1.0;
  for (int col = 0; col < D; ++col) {
    int piv = col;
    for (int r = col + 1; r < D; ++r)
      if (std::abs(a[r * D + col]) > std::abs(a[piv * D + col])) piv = r;
    if (piv != col) {
      for (int c = 0; c < D; ++c) {
        std::swap(a[piv * D + c], a[col * D + c]);
        std::swap(inv[piv * D + c], inv[col * D + c]);
      }
      det = -det;
    }
    const double d = a[col * D + col];
    det *= d;
    if (d == 0.0) return 0.0;
    const double r = 1.0 / d;
    for (int c = 0; c < D; ++c) {
      a[col * D + c] *= r;
      inv[col * D + c] *= r;
    }
    for (int row = 0; row < D; ++row) {
      if (row == col) continue;
      const double f = a[row * D + col];
      if (f == 0.0) continue;
      for (int c = 0; c < D; ++c) {
        a[row * D + c] -= f * a[col * D + c];
        inv[row * D + c] -= f * inv[col * D + c];
      }
    }
  }
  return det;
}

}  // namespace detail

// Skew-symmetric invertible D x D deformation matrix Theta^{ab}.
class ThetaMatrix {
 public:
  // Block-diagonal form: diag of [[0, th_j], [-th_j, 0]] blocks.
  static ThetaMatrix block_diagonal(std::span<const double> thetas) {
    const int D = 2 * static_cast<int>(thetas.size());
    std::vector<double> m(static_cast<size_t>(D) * D, 0.0);
    for (int j = 0; j < D / 2; ++j) {
      m[(2 * j) * D + 2 * j + 1] = thetas[j];
      m[(2 * j + 1) * D + 2 * j] = -thetas[j];
    }
    return ThetaMatrix(D, std::move(m));
  }

  static ThetaMatrix general(int D, std::span<const double> entries) {
    return ThetaMatrix(D, std::vector<double>(entries.begin(), entries.end()));
  }

  int dim() const { return dim_; }
  double at(int a, int b) const { return m_[a * dim_ + b]; }
  double inv_at(int a, int b) const { return inv_[a * dim_ + b]; }

 private:
  ThetaMatrix(int D, std::vector<double> m) : dim_(D), m_(std::move(m)) {
    if (D < 2 || D % 2 != 0) throw GeometryError("Theta dimension must be even");
    if (static_cast<int>(m_.size()) != D * D)
      throw GeometryError("Theta entry count mismatch");
    for (int a = 0; a < D; ++a)
      for (int b = 0; b < D; ++b)
        if (m_[a * D + b] != -m_[b * D + a])
          throw GeometryError("Theta must be exactly skew-symmetric");
    const double det = detail::invert_small(m_, D, inv_);
    if (std::abs(det) < 1e-300) throw GeometryError("Theta is singular");
    // Theta * Theta^{-1} = 1 to 1e-12
    for (int a = 0; a < D; ++a)
      for (int b = 0; b < D; ++b) {
        double s = 0.0;
        for (int c = 0; c < D; ++c) s += at(a, c) * inv_at(c, b);
        if (std::abs(s - (a == b ? 1.0 : 0.0)) > 1e-12)
          throw GeometryError("Theta inverse check failed");
      }
  }

  int dim_;
  std::vector<double> m_;   // Theta^{ab}
  std::vector<double> inv_; // (Theta^{-1})_{ab}
};

// Frame data derived from D scalars phi^a. e^a_mu = d_mu phi^a by
// construction, so curl-freeness holds to derivative commutation.
class Vielbein {
 public:
  static constexpr double kDetFloor = 1e-10;

  Vielbein(const BoxGrid& grid, std::vector<ScalarField> phi_a,
           const StencilSpec& spec = {})
      : grid_(&grid), phi_a_(std::move(phi_a)) {
    const int D = grid.dim();
    if (static_cast<int>(phi_a_.size()) != D)
      throw GeometryError("need exactly D twist scalars");
    frame_.resize(D);
    for (int a = 0; a < D; ++a) {
      frame_[a].resize(D);
      for (int mu = 0; mu < D; ++mu)
        frame_[a][mu] = partial(phi_a_[a], mu, spec);
    }
    inverse_frame_.assign(D, std::vector<ScalarField>(D));
    for (int a = 0; a < D; ++a)
      for (int mu = 0; mu < D; ++mu)
        inverse_frame_[a][mu] = ScalarField(grid);
    det_ = ScalarField(grid);
    inv_det_ = ScalarField(grid);

    std::vector<double> m(static_cast<size_t>(D) * D), inv;
    double worst = std::numeric_limits<double>::infinity();
    std::int64_t worst_lin = 0;
    for (std::int64_t lin = 0; lin < grid.size(); ++lin) {
      for (int a = 0; a < D; ++a)
        for (int mu = 0; mu < D; ++mu)
          m[a * D + mu] = frame_[a][mu][lin].real();
      const double det = detail::invert_small(m, D, inv);
      if (std::abs(det) < worst) {
        worst = std::abs(det);
        worst_lin = lin;
      }
      det_[lin] = det;
      inv_det_[lin] = det != 0.0 ? 1.0 / det : 0.0;
      // inv is (e^a_mu)^{-1}: rows mu, cols a -> e_a^mu = inv[mu*D + a]
      for (int a = 0; a < D; ++a)
        for (int mu = 0; mu < D; ++mu)
          inverse_frame_[a][mu][lin] = inv[mu * D + a];
    }
    if (worst < kDetFloor) {
      std::vector<int> mi(D);
      grid.unravel(worst_lin, mi);
      std::ostringstream os;
      os << "degenerate frame: |det e| = " << worst << " at (";
      for (int a = 0; a < D; ++a) os << (a ? "," : "") << grid.coord(mi[a], a);
      os << ")";
      throw DegenerateFrame(os.str());
    }
  }

  static Vielbein identity(const BoxGrid& grid, const StencilSpec& spec = {}) {
    std::vector<ScalarField> phis;
    for (int a = 0; a < grid.dim(); ++a)
      phis.push_back(coordinate_field(grid, a));
    return Vielbein(grid, std::move(phis), spec);
  }

  const BoxGrid& grid() const { return *grid_; }
  int dim() const { return grid_->dim(); }
  const ScalarField& phi(int a) const { return phi_a_[a]; }
  const ScalarField& frame(int a, int mu) const { return frame_[a][mu]; }          // e^a_mu
  const ScalarField& inverse_frame(int a, int mu) const { return inverse_frame_[a][mu]; }  // e_a^mu
  const ScalarField& det() const { return det_; }       // e
  const ScalarField& inv_det() const { return inv_det_; }  // e^{-1}

  // True when every phi^a is exactly the coordinate x^a sample.
  bool is_identity_twist() const {
    for (int a = 0; a < dim(); ++a) {
      const ScalarField xa = coordinate_field(*grid_, a);
      for (std::int64_t i = 0; i < xa.size(); ++i)
        if (phi_a_[a][i] != xa[i]) return false;
    }
    return true;
  }

 private:
  const BoxGrid* grid_;
  std::vector<ScalarField> phi_a_;
  std::vector<std::vector<ScalarField>> frame_;          // [a][mu]
  std::vector<std::vector<ScalarField>> inverse_frame_;  // [a][mu]
  ScalarField det_;
  ScalarField inv_det_;
};

inline Vielbein build_vielbein(std::vector<ScalarField> phi_a,
                               const StencilSpec& spec = {}) {
  if (phi_a.empty()) throw GeometryError("no twist scalars given");
  const BoxGrid& g = phi_a[0].grid();
  return Vielbein(g, std::move(phi_a), spec);
}

// X_a f = e_a^mu d_mu f
inline ScalarField X_apply(const Vielbein& v, int a, const ScalarField& f,
                           const StencilSpec& spec = {}) {
  const int D = v.dim();
  if (a < 0 || a >= D) throw GeometryError("frame index out of range");
  ScalarField r(f.grid());
  for (int mu = 0; mu < D; ++mu) {
    const ScalarField df = partial(f, mu, spec);
    const ScalarField& e = v.inverse_frame(a, mu);
    for (std::int64_t i = 0; i < r.size(); ++i) r[i] += e[i] * df[i];
  }
  return r;
}

// Xt^a f = (i/2) Theta^{ab} X_b f
inline ScalarField Xtilde_apply(const ThetaMatrix& theta, const Vielbein& v,
                                int a, const ScalarField& f,
                                const StencilSpec& spec = {},
                                double theta_scale = 1.0) {
  const int D = v.dim();
  if (a < 0 || a >= D) throw GeometryError("frame index out of range");
  ScalarField r(f.grid());
  const cplx half_i(0.0, 0.5);
  for (int b = 0; b < D; ++b) {
    const double t = theta_scale * theta.at(a, b);
    if (t == 0.0) continue;
    r += (half_i * t) * X_apply(v, b, f, spec);
  }
  return r;
}

// xt_mu = 2 (Theta^{-1})_{mu nu} x^nu
inline std::vector<ScalarField> xtilde_coords(const ThetaMatrix& theta,
                                              const BoxGrid& grid) {
  const int D = grid.dim();
  std::vector<ScalarField> xt;
  xt.reserve(D);
  for (int mu = 0; mu < D; ++mu) {
    ScalarField f(grid);
    for (int nu = 0; nu < D; ++nu) {
      const double c = 2.0 * theta.inv_at(mu, nu);
      if (c == 0.0) continue;
      const ScalarField xnu = coordinate_field(grid, nu);
      for (std::int64_t i = 0; i < f.size(); ++i) f[i] += c * xnu[i];
    }
    xt.push_back(std::move(f));
  }
  return xt;
}

// Position-dependent Thetat^{mu nu}(x) = Theta^{ab} e_a^mu e_b^nu
inline std::vector<std::vector<ScalarField>> twisted_theta(
    const ThetaMatrix& theta, const Vielbein& v) {
  const int D = v.dim();
  std::vector<std::vector<ScalarField>> tt(D, std::vector<ScalarField>(D));
  for (int mu = 0; mu < D; ++mu)
    for (int nu = 0; nu < D; ++nu) {
      ScalarField f(v.grid());
      for (int a = 0; a < D; ++a)
        for (int b = 0; b < D; ++b) {
          const double t = theta.at(a, b);
          if (t == 0.0) continue;
          const ScalarField& ea = v.inverse_frame(a, mu);
          const ScalarField& eb = v.inverse_frame(b, nu);
          for (std::int64_t i = 0; i < f.size(); ++i)
            f[i] += t * ea[i] * eb[i];
        }
      tt[mu][nu] = std::move(f);
    }
  return tt;
}

}  // namespace twistar
