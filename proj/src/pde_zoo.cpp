#include "fns/pde_zoo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fns/errors.hpp"
#include "fns/rng.hpp"

namespace fns {

bool Stencil9Field::is_constant() const {
  for (const auto& c : coeffs)
    if (c != coeffs.front()) return false;
  return true;
}

std::vector<cplx> Stencil9Field::diagonal() const {
  std::vector<cplx> d(coeffs.size());
  for (std::size_t p = 0; p < coeffs.size(); ++p) d[p] = coeffs[p][C];
  return d;
}

Stencil9Field constant_stencil(const Grid& g, const Coeffs9& c) {
  Stencil9Field s(g);
  std::fill(s.coeffs.begin(), s.coeffs.end(), c);
  return s;
}

Field apply_stencil(const Stencil9Field& s, const Field& u) {
  require_same_grid(s.grid, u.grid, "apply_stencil");
  const int nx = s.grid.nx();
  const int ny = s.grid.ny();
  Field out(s.grid);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const Coeffs9& c = s.at(i, j);
      cplx acc = 0.0;
      for (int k = 0; k < 9; ++k) {
        const int ii = i + kDx[k];
        const int jj = j + kDy[k];
        if (ii < 0 || ii >= nx || jj < 0 || jj >= ny) continue;
        acc += c[k] * u(ii, jj);
      }
      out(i, j) = acc;
    }
  }
  return out;
}

Field apply_stencil_adjoint(const Stencil9Field& s, const Field& v) {
  require_same_grid(s.grid, v.grid, "apply_stencil_adjoint");
  const int nx = s.grid.nx();
  const int ny = s.grid.ny();
  Field out(s.grid);
  // row p of A touches column p + o; scatter conj(c) v[p] there
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const Coeffs9& c = s.at(i, j);
      const cplx vp = v(i, j);
      for (int k = 0; k < 9; ++k) {
        const int ii = i + kDx[k];
        const int jj = j + kDy[k];
        if (ii < 0 || ii >= nx || jj < 0 || jj >= ny) continue;
        out(ii, jj) += std::conj(c[k]) * vp;
      }
    }
  }
  return out;
}

Stencil9Field assemble_random_diffusion(const ElementField& a) {
  const Grid& g = a.grid;
  for (double v : a.values)
    if (!(v > 0.0)) throw NonPositiveCoefficient("diffusion coefficient must be positive");
  Stencil9Field s(g);
  for (int j = 0; j < g.n; ++j) {
    for (int i = 0; i < g.n; ++i) {
      const double a1 = a(i + 1, j);      // lower right
      const double a2 = a(i + 1, j + 1);  // upper right
      const double a3 = a(i, j);          // lower left
      const double a4 = a(i, j + 1);      // upper left
      Coeffs9& c = s.at(i, j);
      c[C] = 2.0 / 3.0 * (a1 + a2 + a3 + a4);
      c[SE] = -a1 / 3.0;
      c[NE] = -a2 / 3.0;
      c[SW] = -a3 / 3.0;
      c[NW] = -a4 / 3.0;
      c[W] = -(a3 + a4) / 6.0;
      c[S] = -(a1 + a3) / 6.0;
      c[N] = -(a2 + a4) / 6.0;
      c[E] = -(a1 + a2) / 6.0;
    }
  }
  return s;
}

namespace {

// displayed arrays, rows top (north) to bottom
constexpr std::array<double, 9> kSx = {-1.0 / 6, 1.0 / 3, -1.0 / 6, -2.0 / 3, 4.0 / 3,
                                       -2.0 / 3, -1.0 / 6, 1.0 / 3, -1.0 / 6};
constexpr std::array<double, 9> kSy = {-1.0 / 6, -2.0 / 3, -1.0 / 6, 1.0 / 3, 4.0 / 3,
                                       1.0 / 3, -1.0 / 6, -2.0 / 3, -1.0 / 6};
constexpr std::array<double, 9> kSxy = {-0.25, 0.0, 0.25, 0.0, 0.0, 0.0, 0.25, 0.0, -0.25};

}  // namespace

Stencil9Field assemble_anisotropic(double xi, double theta, const Grid& g) {
  if (!(xi > 0.0)) throw DomainError("anisotropy strength xi must be positive");
  const double cs = std::cos(theta);
  const double sn = std::sin(theta);
  const double c1 = cs * cs + xi * sn * sn;
  const double c23 = 2.0 * cs * sn * (1.0 - xi);
  const double c4 = sn * sn + xi * cs * cs;
  Coeffs9 c{};
  for (int k = 0; k < 9; ++k) c[k] = c1 * kSx[k] + c23 * kSxy[k] + c4 * kSy[k];
  return constant_stencil(g, c);
}

double sdfem_delta(double eps, double wx, double wy, double h) {
  const double wn = std::hypot(wx, wy);
  if (wn == 0.0) return 0.0;
  const double peclet = wn * h / (2.0 * eps);
  if (peclet <= 1.0) return 0.0;
  return h / (2.0 * wn) * (1.0 - 1.0 / peclet);
}

Stencil9Field assemble_convection_diffusion(double eps, double wx, double wy, const Grid& g) {
  if (!(eps > 0.0)) throw DomainError("viscosity eps must be positive");
  const double h = g.h();
  const double delta = sdfem_delta(eps, wx, wy, h);
  const std::array<double, 9> diff = {-1, -1, -1, -1, 8, -1, -1, -1, -1};
  const std::array<double, 9> wind = {-wx + wy,       4 * wy,  wx + wy, -4 * wx, 0.0,
                                      4 * wx,         -(wx + wy), -4 * wy, wx - wy};
  const double q = wx * wx + wy * wy;
  const double xy = wx * wy;
  const std::array<double, 9> stab = {-q / 6 + xy / 2,
                                      wx * wx / 3 - 2 * wy * wy / 3,
                                      -q / 6 - xy / 2,
                                      -2 * wx * wx / 3 + wy * wy / 3,
                                      4 * q / 3,
                                      -2 * wx * wx / 3 + wy * wy / 3,
                                      -q / 6 - xy / 2,
                                      wx * wx / 3 - 2 * wy * wy / 3,
                                      -q / 6 + xy / 2};
  // wind block scale h/12 matches bilinear element assembly under the h^2 RHS
  Coeffs9 c{};
  for (int k = 0; k < 9; ++k) c[k] = eps / 3.0 * diff[k] + h / 12.0 * wind[k] + delta * stab[k];
  return constant_stencil(g, c);
}

Stencil9Field assemble_jumping(const NodeCoefficient& a) {
  const Grid& g = a.grid;
  for (double v : a.values)
    if (!(v > 0.0)) throw NonPositiveCoefficient("jumping coefficient must be positive");
  Stencil9Field s(g);
  const int nx = g.nx();
  const int ny = g.ny();
  auto harm = [](double p, double q) { return -2.0 * p * q / (p + q); };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double ac = a(i, j);
      // cells beyond the wall reuse the node's own value
      const double aw = i > 0 ? a(i - 1, j) : ac;
      const double ae = i + 1 < nx ? a(i + 1, j) : ac;
      const double as = j > 0 ? a(i, j - 1) : ac;
      const double an = j + 1 < ny ? a(i, j + 1) : ac;
      Coeffs9& c = s.at(i, j);
      c[W] = harm(aw, ac);
      c[E] = harm(ae, ac);
      c[S] = harm(as, ac);
      c[N] = harm(an, ac);
      c[C] = -(c[N] + c[S] + c[E] + c[W]);
    }
  }
  return s;
}

Stencil9Field laplacian5(const Grid& g, bool scaled) {
  const double f = scaled ? 1.0 / (g.h() * g.h()) : 1.0;
  Coeffs9 c{};
  c[C] = 4.0 * f;
  c[N] = c[S] = c[E] = c[W] = -f;
  return constant_stencil(g, c);
}

Stencil9Field poisson1d(const Grid& g) {
  if (g.dim != 1) throw DomainError("poisson1d needs a one-dimensional grid");
  const double f = 1.0 / (g.h() * g.h());
  Coeffs9 c{};
  c[C] = 2.0 * f;
  c[W] = c[E] = -f;
  return constant_stencil(g, c);
}

double grf_mode_weight(int j, int k) {
  return 1.0 / (std::numbers::pi * std::numbers::pi * (j * j + k * k) + 9.0);
}

ElementField grf_from_modes(const Grid& g, const std::vector<double>& zeta) {
  const int ne = g.n + 1;
  const int J = g.n + 1;
  if (zeta.size() != static_cast<std::size_t>(J) * J)
    throw ShapeMismatch("grf_from_modes: expected (n+1)^2 modal draws");
  // s[e * J + (j-1)] = sin(j pi x_e) at element centres
  std::vector<double> s(static_cast<std::size_t>(ne) * J);
  for (int e = 0; e < ne; ++e)
    for (int j = 1; j <= J; ++j)
      s[static_cast<std::size_t>(e) * J + j - 1] = std::sin(j * std::numbers::pi * (e + 0.5) * g.h());
  // t[ey][j] = sum_k w_jk zeta_jk 2 sin(k pi y)
  std::vector<double> t(static_cast<std::size_t>(ne) * J, 0.0);
  for (int ey = 0; ey < ne; ++ey)
    for (int k = 1; k <= J; ++k) {
      const double sy = 2.0 * s[static_cast<std::size_t>(ey) * J + k - 1];
      for (int j = 1; j <= J; ++j)
        t[static_cast<std::size_t>(ey) * J + j - 1] +=
            grf_mode_weight(j, k) * zeta[static_cast<std::size_t>(k - 1) * J + j - 1] * sy;
    }
  ElementField a(g);
  for (int ey = 0; ey < ne; ++ey)
    for (int ex = 0; ex < ne; ++ex) {
      double acc = 0.0;
      for (int j = 1; j <= J; ++j)
        acc += t[static_cast<std::size_t>(ey) * J + j - 1] * s[static_cast<std::size_t>(ex) * J + j - 1];
      a(ex, ey) = std::exp(acc);
    }
  return a;
}

ElementField sample_grf_coefficient(const Grid& g, std::uint64_t seed) {
  const int J = g.n + 1;
  CounterRng rng(seed, 0x6772f);
  std::vector<double> zeta(static_cast<std::size_t>(J) * J);
  for (std::size_t q = 0; q < zeta.size(); ++q) zeta[q] = rng.normal(q);
  return grf_from_modes(g, zeta);
}

int checkerboard_block(int i, int n, int blocks) {
  const int b = static_cast<int>(std::floor((i + 0.5) * blocks / (n + 1)));
  return std::clamp(b, 0, blocks - 1);
}

std::pair<NodeCoefficient, RegionMask> sample_checkerboard(const Grid& g, int blocks, double m,
                                                            std::uint64_t seed) {
  if (blocks < 1) throw DomainError("checkerboard needs at least one block");
  CounterRng rng(seed, 0xc4ec);
  const double low = std::pow(10.0, -m);
  NodeCoefficient a(g);
  RegionMask mask{g, std::vector<int>(g.size(), 1)};
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const int bx = checkerboard_block(i, g.n, blocks);
      const int by = g.dim == 2 ? checkerboard_block(j, g.n, blocks) : 0;
      const bool is_low = rng.uniform(static_cast<std::uint64_t>(by) * blocks + bx) < 0.5;
      a(i, j) = is_low ? low : 1.0;
      mask.labels[g.index(i, j)] = is_low ? 2 : 1;
    }
  return {a, mask};
}

bool has_floating_region(const RegionMask& mask, int label) {
  const Grid& g = mask.grid;
  const int nx = g.nx(), ny = g.ny();
  std::vector<char> seen(g.size(), 0);
  std::vector<std::size_t> stack;
  auto push = [&](int i, int j) {
    const std::size_t p = g.index(i, j);
    if (mask.labels[p] == label && !seen[p]) {
      seen[p] = 1;
      stack.push_back(p);
    }
  };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      if (i == 0 || j == 0 || i == nx - 1 || j == ny - 1) push(i, j);
  while (!stack.empty()) {
    const std::size_t p = stack.back();
    stack.pop_back();
    const int i = static_cast<int>(p % nx), j = static_cast<int>(p / nx);
    if (i > 0) push(i - 1, j);
    if (i + 1 < nx) push(i + 1, j);
    if (j > 0) push(i, j - 1);
    if (j + 1 < ny) push(i, j + 1);
  }
  for (std::size_t p = 0; p < g.size(); ++p)
    if (mask.labels[p] == label && !seen[p]) return true;
  return false;
}

RhsKind parse_rhs_kind(const std::string& s) {
  if (s == "f1") return RhsKind::f1;
  if (s == "f2") return RhsKind::f2;
  if (s == "f3") return RhsKind::f3;
  if (s == "f4") return RhsKind::f4;
  throw ValidationError("unknown rhs kind '" + s + "'");
}

Field random_field(const Grid& g, std::uint64_t seed, std::uint64_t stream) {
  CounterRng rng(seed, stream);
  Field out(g);
  for (std::size_t p = 0; p < out.size(); ++p) out.values[p] = rng.normal(p);
  return out;
}

Field make_rhs(RhsKind kind, const Grid& g, const Stencil9Field* stencil, std::uint64_t seed) {
  using std::numbers::pi;
  switch (kind) {
    case RhsKind::f1:
      return sample(g, [](double x, double y) { return std::sin(pi * x) * std::sin(3 * pi * y); });
    case RhsKind::f2:
      return sample(g, [](double x, double y) {
        return std::exp(-200.0 * ((x - 0.6) * (x - 0.6) + (y - 0.55) * (y - 0.55)));
      });
    case RhsKind::f3:
      return sample(g, [](double, double) { return 1.0; });
    case RhsKind::f4:
      if (stencil == nullptr) throw ValidationError("rhs f4 needs the operator");
      return apply_stencil(*stencil, random_field(g, seed, 0xf4));
  }
  throw ValidationError("unknown rhs kind");
}

}  // namespace fns
