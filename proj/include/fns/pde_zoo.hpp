#pragma once

#include <array>
#include <string>
#include <cstdint>
#include <utility>
#include <vector>

#include "fns/grid_spectral.hpp"

namespace fns {

/// Stencil slot order and the (dx, dy) offset each slot reads from.
/// North is +y.
enum Slot : int { NW = 0, N = 1, NE = 2, W = 3, C = 4, E = 5, SW = 6, S = 7, SE = 8 };
inline constexpr std::array<int, 9> kDx = {-1, 0, 1, -1, 0, 1, -1, 0, 1};
inline constexpr std::array<int, 9> kDy = {1, 1, 1, 0, 0, 0, -1, -1, -1};

using Coeffs9 = std::array<cplx, 9>;

/// Per-node compact 9-point operator with a zero Dirichlet halo.
struct Stencil9Field {
  Grid grid;
  std::vector<Coeffs9> coeffs;

  Stencil9Field() = default;
  explicit Stencil9Field(const Grid& g) : grid(g), coeffs(g.size(), Coeffs9{}) {}

  Coeffs9& at(int i, int j = 0) { return coeffs[grid.index(i, j)]; }
  const Coeffs9& at(int i, int j = 0) const { return coeffs[grid.index(i, j)]; }
  bool is_constant() const;
  std::vector<cplx> diagonal() const;
};

Stencil9Field constant_stencil(const Grid& g, const Coeffs9& c);

/// Matrix-free A u.
Field apply_stencil(const Stencil9Field& s, const Field& u);
/// Matrix-free A^H v.
Field apply_stencil_adjoint(const Stencil9Field& s, const Field& v);

/// Coefficient on the (n+1) x (n+1) element grid; element (ex, ey) covers
/// [ex h, (ex+1) h] x [ey h, (ey+1) h].
struct ElementField {
  Grid grid;
  std::vector<double> values;

  explicit ElementField(const Grid& g)
      : grid(g), values(static_cast<std::size_t>(g.n + 1) * (g.n + 1), 1.0) {}
  double& operator()(int ex, int ey) { return values[static_cast<std::size_t>(ey) * (grid.n + 1) + ex]; }
  double operator()(int ex, int ey) const {
    return values[static_cast<std::size_t>(ey) * (grid.n + 1) + ex];
  }
};

/// Coefficient held at the nodes (finite-volume cells).
struct NodeCoefficient {
  Grid grid;
  std::vector<double> values;

  explicit NodeCoefficient(const Grid& g) : grid(g), values(g.size(), 1.0) {}
  double& operator()(int i, int j) { return values[grid.index(i, j)]; }
  double operator()(int i, int j) const { return values[grid.index(i, j)]; }
};

/// Labels 1 (a = 1) and 2 (a = 10^-m) per node.
struct RegionMask {
  Grid grid;
  std::vector<int> labels;
};

Stencil9Field assemble_random_diffusion(const ElementField& a);
Stencil9Field assemble_anisotropic(double xi, double theta, const Grid& g);

/// SDFEM stabilization weight for a constant wind on a uniform mesh.
double sdfem_delta(double eps, double wx, double wy, double h);
Stencil9Field assemble_convection_diffusion(double eps, double wx, double wy, const Grid& g);

Stencil9Field assemble_jumping(const NodeCoefficient& a);

/// Standard 5-point Laplacian [-1; -1 4 -1; -1]; divided by h^2 when scaled.
Stencil9Field laplacian5(const Grid& g, bool scaled = false);
/// tridiag(-1, 2, -1) / h^2 on a one-dimensional grid.
Stencil9Field poisson1d(const Grid& g);

/// Karhunen-Loeve weight (pi^2 (j^2 + k^2) + 9)^-1.
double grf_mode_weight(int j, int k);
ElementField sample_grf_coefficient(const Grid& g, std::uint64_t seed);
/// Same field built from a caller-supplied J x J array of modal draws
/// (zeta[(k-1) J + (j-1)]).
ElementField grf_from_modes(const Grid& g, const std::vector<double>& zeta);

/// Block index of 0-based node i among `blocks` strips, snapped to the dual
/// cell boundary nearest to the block edge.
int checkerboard_block(int i, int n, int blocks);
std::pair<NodeCoefficient, RegionMask> sample_checkerboard(const Grid& g, int blocks, double m,
                                                            std::uint64_t seed);
/// True when some 4-connected component of nodes with this label does not
/// touch the boundary (a floating high-coefficient island makes A nearly singular).
bool has_floating_region(const RegionMask& mask, int label = 1);

enum class RhsKind { f1, f2, f3, f4 };
RhsKind parse_rhs_kind(const std::string& s);
/// f4 = A u with u standard normal (requires the stencil).
Field make_rhs(RhsKind kind, const Grid& g, const Stencil9Field* stencil, std::uint64_t seed);
/// Standard normal field.
Field random_field(const Grid& g, std::uint64_t seed, std::uint64_t stream = 0);

}  // namespace fns
