#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace fns {

using cplx = std::complex<double>;

/// Uniform grid of interior nodes on (0,1)^dim with homogeneous Dirichlet walls.
///
/// Node (i, j) with 0 <= i, j < n sits at ((i+1)h, (j+1)h). One-dimensional
/// grids reuse the same layout with a single row.
struct Grid {
  int n = 1;
  int dim = 2;

  Grid() = default;
  Grid(int n, int dim = 2);

  double h() const { return 1.0 / (n + 1); }
  /// Length of the odd-reflected periodic lattice, 2(n+1).
  int extended_n() const { return 2 * (n + 1); }
  int nx() const { return n; }
  int ny() const { return dim == 2 ? n : 1; }
  int ex() const { return extended_n(); }
  int ey() const { return dim == 2 ? extended_n() : 1; }
  std::size_t size() const { return static_cast<std::size_t>(nx()) * ny(); }
  std::size_t extended_size() const { return static_cast<std::size_t>(ex()) * ey(); }
  std::size_t index(int i, int j = 0) const { return static_cast<std::size_t>(j) * nx() + i; }
  std::size_t extended_index(int i, int j = 0) const {
    return static_cast<std::size_t>(j) * ex() + i;
  }

  bool operator==(const Grid&) const = default;
};

/// Node values on the interior of a grid, row-major with x fastest.
struct Field {
  Grid grid;
  std::vector<cplx> values;

  Field() = default;
  explicit Field(const Grid& g) : grid(g), values(g.size()) {}
  Field(const Grid& g, std::vector<cplx> v);

  cplx& operator()(int i, int j = 0) { return values[grid.index(i, j)]; }
  const cplx& operator()(int i, int j = 0) const { return values[grid.index(i, j)]; }
  std::size_t size() const { return values.size(); }
};

/// Values on the 2(n+1)-periodic lattice obtained by odd reflection.
struct ExtendedField {
  Grid grid;
  std::vector<cplx> values;

  ExtendedField() = default;
  explicit ExtendedField(const Grid& g) : grid(g), values(g.extended_size()) {}

  cplx& operator()(int i, int j = 0) { return values[grid.extended_index(i, j)]; }
  const cplx& operator()(int i, int j = 0) const { return values[grid.extended_index(i, j)]; }
};

void require_same_grid(const Grid& a, const Grid& b, const char* what);

double norm2(const Field& f);
double norm2(std::span<const cplx> v);
/// Hermitian inner product sum conj(a_k) b_k.
cplx dot(const Field& a, const Field& b);
cplx dot(std::span<const cplx> a, std::span<const cplx> b);

Field operator+(const Field& a, const Field& b);
Field operator-(const Field& a, const Field& b);
Field operator*(cplx s, const Field& a);
/// y += s x
void axpy(cplx s, const Field& x, Field& y);

/// Sample a real function at the interior nodes.
template <class F>
Field sample(const Grid& g, F&& fn) {
  Field out(g);
  const double h = g.h();
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i)
      out(i, j) = g.dim == 2 ? fn((i + 1) * h, (j + 1) * h) : fn((i + 1) * h, 0.0);
  return out;
}

// --- odd reflection -------------------------------------------------------

/// Odd-symmetric periodic extension: index k in 1..n of each active
/// dimension holds the input node k-1; index 2(n+1)-k holds its negation;
/// wall indices 0 and n+1 are zero.
ExtendedField odd_extend(const Field& f);
/// Reads the interior indices 1..n back out (inverse of odd_extend).
Field restrict(const ExtendedField& fe);
/// Adjoint of odd_extend with respect to the Hermitian inner products.
Field odd_extend_adjoint(const ExtendedField& fe);
/// Adjoint of restrict: embeds interior values into a zero lattice.
ExtendedField restrict_adjoint(const Field& f);

// --- FFT ------------------------------------------------------------------

enum class Direction { forward, inverse };

bool is_power_of_two(int v);

/// Unitary radix-2 DFT of one contiguous line, in place.
/// forward: X_m = N^{-1/2} sum_k x_k exp(-2 pi i m k / N).
void fft_line(std::span<cplx> line, Direction dir);

/// Unitary DFT over every active dimension of the extended lattice.
/// Throws NonPowerOfTwoSize unless 2(n+1) is a power of two.
ExtendedField fft2(const ExtendedField& fe, Direction dir);
void fft2_inplace(ExtendedField& fe, Direction dir);

/// Angular frequency 2 pi m / N' of lattice bin m, wrapped into [-pi, pi).
double lattice_theta(int m, int extended_n);

// --- sine transform and the 1D fast Poisson solver ------------------------

/// Orthonormal DST-I over every active dimension, computed through
/// odd_extend + FFT. Coefficient j pairs with sqrt(2h) sin(j pi h k).
/// The transform is symmetric and its own inverse.
Field sine_transform(const Field& f);

/// Eigenvalue 4/h^2 sin^2(pi h j / 2) of tridiag(-1,2,-1)/h^2, j in 1..n.
double poisson1d_eigenvalue(int j, const Grid& g);

/// Solves (1/h^2) tridiag(-1,2,-1) u = f by expanding f in the analytic
/// eigenvectors, dividing by the eigenvalues and recombining.
Field dst_solve_poisson_1d(const Field& f);

}  // namespace fns
