#include "fns/grid_spectral.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <unordered_map>

#include "fns/errors.hpp"

namespace fns {

Grid::Grid(int n_, int dim_) : n(n_), dim(dim_) {
  if (n < 1) throw DomainError("grid needs at least one interior node, got n=" + std::to_string(n));
  if (dim != 1 && dim != 2) throw DomainError("grid dimension must be 1 or 2");
}

Field::Field(const Grid& g, std::vector<cplx> v) : grid(g), values(std::move(v)) {
  if (values.size() != g.size()) throw ShapeMismatch("field value count does not match grid");
}

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b))
    throw GridMismatch(std::string(what) + ": grid " + std::to_string(a.n) + "^" +
                       std::to_string(a.dim) + " vs " + std::to_string(b.n) + "^" +
                       std::to_string(b.dim));
}

double norm2(std::span<const cplx> v) {
  double s = 0.0;
  for (const auto& z : v) s += std::norm(z);
  return std::sqrt(s);
}

double norm2(const Field& f) { return norm2(std::span<const cplx>(f.values)); }

cplx dot(std::span<const cplx> a, std::span<const cplx> b) {
  if (a.size() != b.size()) throw ShapeMismatch("dot: length mismatch");
  cplx s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::conj(a[k]) * b[k];
  return s;
}

cplx dot(const Field& a, const Field& b) {
  require_same_grid(a.grid, b.grid, "dot");
  return dot(std::span<const cplx>(a.values), std::span<const cplx>(b.values));
}

Field operator+(const Field& a, const Field& b) {
  require_same_grid(a.grid, b.grid, "field sum");
  Field out = a;
  for (std::size_t k = 0; k < out.size(); ++k) out.values[k] += b.values[k];
  return out;
}

Field operator-(const Field& a, const Field& b) {
  require_same_grid(a.grid, b.grid, "field difference");
  Field out = a;
  for (std::size_t k = 0; k < out.size(); ++k) out.values[k] -= b.values[k];
  return out;
}

Field operator*(cplx s, const Field& a) {
  Field out = a;
  for (auto& z : out.values) z *= s;
  return out;
}

void axpy(cplx s, const Field& x, Field& y) {
  require_same_grid(x.grid, y.grid, "axpy");
  for (std::size_t k = 0; k < y.size(); ++k) y.values[k] += s * x.values[k];
}

// --- odd reflection -------------------------------------------------------

ExtendedField odd_extend(const Field& f) {
  const Grid& g = f.grid;
  ExtendedField out(g);
  const int ne = g.extended_n();
  if (g.dim == 1) {
    for (int k = 1; k <= g.n; ++k) {
      out(k) = f(k - 1);
      out(ne - k) = -f(k - 1);
    }
    return out;
  }
  for (int b = 1; b <= g.n; ++b) {
    for (int a = 1; a <= g.n; ++a) {
      const cplx v = f(a - 1, b - 1);
      out(a, b) = v;
      out(ne - a, b) = -v;
      out(a, ne - b) = -v;
      out(ne - a, ne - b) = v;
    }
  }
  return out;
}

Field restrict(const ExtendedField& fe) {
  const Grid& g = fe.grid;
  Field out(g);
  if (g.dim == 1) {
    for (int k = 1; k <= g.n; ++k) out(k - 1) = fe(k);
    return out;
  }
  for (int b = 1; b <= g.n; ++b)
    for (int a = 1; a <= g.n; ++a) out(a - 1, b - 1) = fe(a, b);
  return out;
}

Field odd_extend_adjoint(const ExtendedField& fe) {
  const Grid& g = fe.grid;
  Field out(g);
  const int ne = g.extended_n();
  if (g.dim == 1) {
    for (int k = 1; k <= g.n; ++k) out(k - 1) = fe(k) - fe(ne - k);
    return out;
  }
  for (int b = 1; b <= g.n; ++b)
    for (int a = 1; a <= g.n; ++a)
      out(a - 1, b - 1) = fe(a, b) - fe(ne - a, b) - fe(a, ne - b) + fe(ne - a, ne - b);
  return out;
}

ExtendedField restrict_adjoint(const Field& f) {
  const Grid& g = f.grid;
  ExtendedField out(g);
  if (g.dim == 1) {
    for (int k = 1; k <= g.n; ++k) out(k) = f(k - 1);
    return out;
  }
  for (int b = 1; b <= g.n; ++b)
    for (int a = 1; a <= g.n; ++a) out(a, b) = f(a - 1, b - 1);
  return out;
}

// --- FFT ------------------------------------------------------------------

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

namespace {

struct FftPlan {
  std::vector<cplx> twiddle;         // exp(-2 pi i k / N), k < N/2
  std::vector<std::uint32_t> bitrev;
  double scale = 1.0;
};

const FftPlan& plan_for(int len) {
  thread_local std::unordered_map<int, FftPlan> cache;
  auto it = cache.find(len);
  if (it != cache.end()) return it->second;
  FftPlan p;
  p.twiddle.resize(len / 2);
  for (int k = 0; k < len / 2; ++k) {
    const double a = -2.0 * std::numbers::pi * k / len;
    p.twiddle[k] = {std::cos(a), std::sin(a)};
  }
  p.bitrev.resize(len);
  int bits = 0;
  while ((1 << bits) < len) ++bits;
  for (int k = 0; k < len; ++k) {
    std::uint32_t r = 0;
    for (int b = 0; b < bits; ++b)
      if (k & (1 << b)) r |= 1u << (bits - 1 - b);
    p.bitrev[k] = r;
  }
  p.scale = 1.0 / std::sqrt(static_cast<double>(len));
  return cache.emplace(len, std::move(p)).first->second;
}

}  // namespace

void fft_line(std::span<cplx> x, Direction dir) {
  const int len = static_cast<int>(x.size());
  if (!is_power_of_two(len))
    throw NonPowerOfTwoSize("FFT length " + std::to_string(len) + " is not a power of two");
  if (len == 1) return;
  const FftPlan& p = plan_for(len);
  for (int k = 0; k < len; ++k) {
    const auto r = static_cast<int>(p.bitrev[k]);
    if (r > k) std::swap(x[k], x[r]);
  }
  const bool inv = dir == Direction::inverse;
  for (int half = 1; half < len; half *= 2) {
    const int stride = len / (2 * half);
    for (int start = 0; start < len; start += 2 * half) {
      for (int k = 0; k < half; ++k) {
        cplx w = p.twiddle[k * stride];
        if (inv) w = std::conj(w);
        const cplx a = x[start + k];
        const cplx b = w * x[start + k + half];
        x[start + k] = a + b;
        x[start + k + half] = a - b;
      }
    }
  }
  for (auto& z : x) z *= p.scale;
}

void fft2_inplace(ExtendedField& fe, Direction dir) {
  const Grid& g = fe.grid;
  const int ex = g.ex();
  const int ey = g.ey();
  if (!is_power_of_two(ex))
    throw NonPowerOfTwoSize("extended size " + std::to_string(ex) +
                            " is not a power of two (n must be 2^k - 1)");
  for (int j = 0; j < ey; ++j)
    fft_line(std::span<cplx>(fe.values.data() + static_cast<std::size_t>(j) * ex, ex), dir);
  if (g.dim == 1) return;
  std::vector<cplx> col(ey);
  for (int i = 0; i < ex; ++i) {
    for (int j = 0; j < ey; ++j) col[j] = fe(i, j);
    fft_line(col, dir);
    for (int j = 0; j < ey; ++j) fe(i, j) = col[j];
  }
}

ExtendedField fft2(const ExtendedField& fe, Direction dir) {
  ExtendedField out = fe;
  fft2_inplace(out, dir);
  return out;
}

double lattice_theta(int m, int extended_n) {
  const int wrapped = m >= extended_n / 2 ? m - extended_n : m;
  return 2.0 * std::numbers::pi * wrapped / extended_n;
}

// --- sine transform -------------------------------------------------------

Field sine_transform(const Field& f) {
  // F(odd_extend(v))_j = -2i N'^{-1/2} sum_k v_k sin(pi j k h) per active
  // dimension, so the orthonormal coefficient is i * F_j in 1D and -F_j in 2D.
  ExtendedField fe = odd_extend(f);
  fft2_inplace(fe, Direction::forward);
  Field out = restrict(fe);
  const cplx factor = f.grid.dim == 1 ? cplx(0.0, 1.0) : cplx(-1.0, 0.0);
  for (auto& z : out.values) z *= factor;
  return out;
}

double poisson1d_eigenvalue(int j, const Grid& g) {
  const double h = g.h();
  const double s = std::sin(std::numbers::pi * h * j / 2.0);
  return 4.0 / (h * h) * s * s;
}

Field dst_solve_poisson_1d(const Field& f) {
  if (f.grid.dim != 1) throw DomainError("dst_solve_poisson_1d expects a one-dimensional grid");
  // (1) expand f in the eigenvectors
  Field coeff = sine_transform(f);
  // (2) divide by the eigenvalues
  for (int j = 1; j <= f.grid.n; ++j) coeff(j - 1) /= poisson1d_eigenvalue(j, f.grid);
  // (3) recombine
  return sine_transform(coeff);
}

}  // namespace fns
