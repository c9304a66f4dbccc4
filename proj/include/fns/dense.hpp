#pragma once

#include <vector>

#include "fns/pde_zoo.hpp"

namespace fns {

/// Row-major complex square matrix.
struct DenseMatrix {
  int n = 0;
  std::vector<cplx> a;

  DenseMatrix() = default;
  explicit DenseMatrix(int n_) : n(n_), a(static_cast<std::size_t>(n_) * n_) {}
  static DenseMatrix identity(int n);
  cplx& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
  const cplx& operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
  std::vector<cplx> column(int j) const;
};

DenseMatrix dense_matrix(const Stencil9Field& s);
std::vector<cplx> matvec(const DenseMatrix& m, const std::vector<cplx>& x);
DenseMatrix matmul(const DenseMatrix& x, const DenseMatrix& y);
double norm1(const DenseMatrix& m);
double max_abs_asymmetry(const DenseMatrix& m);

/// Partial-pivoting LU.
struct LuFactor {
  DenseMatrix lu;
  std::vector<int> piv;
  bool singular = false;
};

LuFactor lu_factor(DenseMatrix m);
std::vector<cplx> lu_solve(const LuFactor& f, std::vector<cplx> b);
DenseMatrix lu_inverse(const LuFactor& f);

struct DenseEigen {
  std::vector<cplx> values;
  DenseMatrix vectors;  // unit 2-norm columns
};

/// Hessenberg reduction + Wilkinson-shifted complex QR to Schur form, then
/// triangular back substitution for eigenvectors. Throws NonConvergentQR
/// after 100 n^2 sweeps.
DenseEigen eig_general(const DenseMatrix& m, double tol = 1e-10);

}  // namespace fns
