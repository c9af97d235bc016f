#pragma once

// Discretized box domain: uniform axis-aligned grid on [-L, L]^D with a
// margin band excluded from every reported norm and integral. Complex
// scalar fields, high-order finite-difference partials, masked reductions.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace twistar {

using cplx = std::complex<double>;

struct GridError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Finite-difference scheme: central of order `accuracy_order` on the
// interior, one-sided windows of the same order inside the margin band.
struct StencilSpec {
  int accuracy_order = 8;  // even, >= 2

  int half_width() const { return accuracy_order / 2; }
  int window() const { return accuracy_order + 1; }
};

// Fornberg's recursion: weights of the m-th derivative at x0 for the given
// nodes. Exact (to rounding) on polynomials of degree <= nodes.size()-1.
inline std::vector<double> fornberg_weights(double x0,
                                            std::span<const double> nodes,
                                            int m) {
  const int nn = static_cast<int>(nodes.size());
  std::vector<double> c(static_cast<size_t>(nn) * (m + 1), 0.0);
  auto at = [&](int j, int k) -> double& { return c[j * (m + 1) + k]; };
  double c1 = 1.0;
  double c4 = nodes[0] - x0;
  at(0, 0) = 1.0;
  for (int i = 1; i < nn; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = nodes[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = nodes[i] - nodes[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          at(i, k) = c1 * (k * at(i - 1, k - 1) - c5 * at(i - 1, k)) / c2;
        at(i, 0) = -c1 * c5 * at(i - 1, 0) / c2;
      }
      for (int k = mn; k >= 1; --k)
        at(j, k) = (c4 * at(j, k) - k * at(j, k - 1)) / c3;
      at(j, 0) = c4 * at(j, 0) / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(nn);
  for (int j = 0; j < nn; ++j) w[j] = at(j, m);
  return w;
}

class BoxGrid {
 public:
  BoxGrid(int dim, double half_width, int points_per_axis, int margin,
          StencilSpec spec = {})
      : dim_(dim),
        half_width_(half_width),
        n_(points_per_axis),
        margin_(margin),
        spec_(spec) {
    if (dim_ < 2 || dim_ % 2 != 0)
      throw GridError("grid dimension must be positive and even");
    if (half_width_ <= 0.0) throw GridError("half_width must be positive");
    if (n_ < 2) throw GridError("need at least 2 points per axis");
    if (margin_ < 0) throw GridError("margin must be nonnegative");
    if (n_ < 2 * spec_.half_width() + 2 * margin_ + 1)
      throw GridError("grid too small for stencil + margin");
    h_ = 2.0 * half_width_ / (n_ - 1);
    strides_.resize(dim_);
    std::int64_t s = 1;
    for (int a = dim_ - 1; a >= 0; --a) {  // row-major, last axis fastest
      strides_[a] = s;
      s *= n_;
    }
    size_ = s;
    build_rows();
  }

  int dim() const { return dim_; }
  double half_width() const { return half_width_; }
  int points_per_axis() const { return n_; }
  int margin() const { return margin_; }
  double spacing() const { return h_; }
  std::int64_t size() const { return size_; }
  const StencilSpec& stencil() const { return spec_; }

  double coord(int idx, int /*axis*/) const {
    return -half_width_ + idx * h_;
  }

  std::int64_t linear(std::span<const int> mi) const {
    std::int64_t p = 0;
    for (int a = 0; a < dim_; ++a) p += mi[a] * strides_[a];
    return p;
  }
  std::int64_t stride(int axis) const { return strides_[axis]; }

  void unravel(std::int64_t lin, std::span<int> mi) const {
    for (int a = 0; a < dim_; ++a) {
      mi[a] = static_cast<int>(lin / strides_[a]);
      lin -= static_cast<std::int64_t>(mi[a]) * strides_[a];
    }
  }

  bool interior_linear(std::int64_t lin) const {
    for (int a = 0; a < dim_; ++a) {
      const int i = static_cast<int>(lin / strides_[a]) % n_;
      if (i < margin_ || i > n_ - 1 - margin_) return false;
    }
    return true;
  }

  bool same(const BoxGrid& o) const {
    return dim_ == o.dim_ && n_ == o.n_ && margin_ == o.margin_ &&
           half_width_ == o.half_width_ &&
           spec_.accuracy_order == o.spec_.accuracy_order;
  }

  // Weight row for d/dx along one axis at node i: window start + weights.
  struct Row {
    int start;
    std::vector<double> w;
  };
  const Row& deriv_row(int i) const { return rows_[i]; }

 private:
  void build_rows() {
    rows_.resize(n_);
    const int wsz = spec_.window();
    const int hw = spec_.half_width();
    std::vector<double> nodes(wsz);
    for (int i = 0; i < n_; ++i) {
      int ws = std::clamp(i - hw, 0, n_ - wsz);
      for (int k = 0; k < wsz; ++k) nodes[k] = (ws + k - i) * h_;
      auto w = fornberg_weights(0.0, nodes, 1);
      // force exact annihilation of constants
      double s = std::accumulate(w.begin(), w.end(), 0.0);
      w[i - ws] -= s;
      rows_[i] = Row{ws, std::move(w)};
    }
  }

  int dim_;
  double half_width_;
  int n_;
  int margin_;
  StencilSpec spec_;
  double h_;
  std::int64_t size_ = 0;
  std::vector<std::int64_t> strides_;
  std::vector<Row> rows_;
};

class ScalarField {
 public:
  ScalarField() : grid_(nullptr) {}
  explicit ScalarField(const BoxGrid& g, cplx fill = {0.0, 0.0})
      : grid_(&g), v_(static_cast<size_t>(g.size()), fill) {}

  const BoxGrid& grid() const { return *grid_; }
  bool valid() const { return grid_ != nullptr; }
  std::int64_t size() const { return static_cast<std::int64_t>(v_.size()); }
  cplx& operator[](std::int64_t i) { return v_[i]; }
  const cplx& operator[](std::int64_t i) const { return v_[i]; }
  std::span<const cplx> values() const { return v_; }
  std::span<cplx> values() { return v_; }

  ScalarField& operator+=(const ScalarField& o) {
    check(o);
    for (size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
    return *this;
  }
  ScalarField& operator-=(const ScalarField& o) {
    check(o);
    for (size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
    return *this;
  }
  ScalarField& operator*=(cplx c) {
    for (auto& x : v_) x *= c;
    return *this;
  }

  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(ScalarField a, cplx c) { return a *= c; }
  friend ScalarField operator*(cplx c, ScalarField a) { return a *= c; }

  // pointwise product
  friend ScalarField operator*(const ScalarField& a, const ScalarField& b) {
    a.check(b);
    ScalarField r(a.grid());
    for (std::int64_t i = 0; i < a.size(); ++i) r[i] = a[i] * b[i];
    return r;
  }

  void check(const ScalarField& o) const {
    if (!grid_ || !o.grid_ || !grid_->same(*o.grid_))
      throw GridError("field grid mismatch");
  }

  bool finite() const {
    for (const auto& x : v_)
      if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) return false;
    return true;
  }

 private:
  const BoxGrid* grid_;
  std::vector<cplx> v_;
};

// Build a field from a pointwise function of the coordinates.
inline ScalarField sample(const BoxGrid& g,
                          const std::function<cplx(std::span<const double>)>& f) {
  ScalarField r(g);
  const int D = g.dim();
  std::vector<int> mi(D, 0);
  std::vector<double> x(D);
  for (std::int64_t lin = 0; lin < g.size(); ++lin) {
    g.unravel(lin, mi);
    for (int a = 0; a < D; ++a) x[a] = g.coord(mi[a], a);
    r[lin] = f(x);
  }
  return r;
}

inline ScalarField coordinate_field(const BoxGrid& g, int axis) {
  return sample(g, [axis](std::span<const double> x) { return cplx(x[axis], 0.0); });
}

inline ScalarField constant_field(const BoxGrid& g, cplx c) {
  return ScalarField(g, c);
}

// p-th order finite-difference partial derivative along axis mu.
inline ScalarField partial(const ScalarField& f, int mu,
                           const StencilSpec& spec = {}) {
  const BoxGrid& g = f.grid();
  if (mu < 0 || mu >= g.dim()) throw GridError("axis index out of range");
  if (spec.accuracy_order != g.stencil().accuracy_order)
    throw GridError("stencil order differs from grid rows");
  ScalarField r(g);
  const int n = g.points_per_axis();
  const std::int64_t st = g.stride(mu);
  const int D = g.dim();
  std::vector<int> mi(D, 0);
  for (std::int64_t lin = 0; lin < g.size(); ++lin) {
    g.unravel(lin, mi);
    const int i = mi[mu];
    const auto& row = g.deriv_row(i);
    const std::int64_t base = lin - static_cast<std::int64_t>(i - row.start) * st;
    cplx acc(0.0, 0.0);
    for (size_t k = 0; k < row.w.size(); ++k)
      acc += row.w[k] * f[base + static_cast<std::int64_t>(k) * st];
    r[lin] = acc;
  }
  (void)n;
  return r;
}

// Masked Riemann sum over the interior (margin band excluded), fixed
// lexicographic summation order so reruns are bit-identical.
inline cplx integrate(const ScalarField& f, const ScalarField& weight) {
  f.check(weight);
  const BoxGrid& g = f.grid();
  cplx acc(0.0, 0.0);
  for (std::int64_t lin = 0; lin < g.size(); ++lin)
    if (g.interior_linear(lin)) acc += f[lin] * weight[lin];
  double hd = 1.0;
  for (int a = 0; a < g.dim(); ++a) hd *= g.spacing();
  return acc * hd;
}

inline cplx integrate(const ScalarField& f) {
  const BoxGrid& g = f.grid();
  cplx acc(0.0, 0.0);
  for (std::int64_t lin = 0; lin < g.size(); ++lin)
    if (g.interior_linear(lin)) acc += f[lin];
  double hd = 1.0;
  for (int a = 0; a < g.dim(); ++a) hd *= g.spacing();
  return acc * hd;
}

// Masked max-abs over the interior.
inline double field_norm(const ScalarField& f) {
  const BoxGrid& g = f.grid();
  double m = 0.0;
  for (std::int64_t lin = 0; lin < g.size(); ++lin)
    if (g.interior_linear(lin)) m = std::max(m, std::abs(f[lin]));
  return m;
}

inline ScalarField conj(const ScalarField& f) {
  ScalarField r(f.grid());
  for (std::int64_t i = 0; i < f.size(); ++i) r[i] = std::conj(f[i]);
  return r;
}

// Schwartz-class proxy: the field must decay below `threshold` relative to
// its interior norm everywhere in the margin band.
inline bool envelope_ok(const ScalarField& f, double threshold = 1e-6) {
  const BoxGrid& g = f.grid();
  const double scale = field_norm(f);
  if (scale == 0.0) return true;
  for (std::int64_t lin = 0; lin < g.size(); ++lin)
    if (!g.interior_linear(lin) && std::abs(f[lin]) > threshold * scale)
      return false;
  return true;
}

}  // namespace twistar
