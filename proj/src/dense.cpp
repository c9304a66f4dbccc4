#include "fns/dense.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fns/errors.hpp"

namespace fns {

DenseMatrix DenseMatrix::identity(int n) {
  DenseMatrix m(n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::vector<cplx> DenseMatrix::column(int j) const {
  std::vector<cplx> c(n);
  for (int i = 0; i < n; ++i) c[i] = (*this)(i, j);
  return c;
}

DenseMatrix dense_matrix(const Stencil9Field& s) {
  const Grid& g = s.grid;
  const int n = static_cast<int>(g.size());
  DenseMatrix m(n);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const auto row = static_cast<int>(g.index(i, j));
      for (int k = 0; k < 9; ++k) {
        const int ii = i + kDx[k];
        const int jj = j + kDy[k];
        if (ii < 0 || ii >= g.nx() || jj < 0 || jj >= g.ny()) continue;
        m(row, static_cast<int>(g.index(ii, jj))) += s.at(i, j)[k];
      }
    }
  return m;
}

std::vector<cplx> matvec(const DenseMatrix& m, const std::vector<cplx>& x) {
  std::vector<cplx> y(m.n);
  for (int i = 0; i < m.n; ++i) {
    cplx acc = 0.0;
    for (int j = 0; j < m.n; ++j) acc += m(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

DenseMatrix matmul(const DenseMatrix& x, const DenseMatrix& y) {
  DenseMatrix z(x.n);
  for (int i = 0; i < x.n; ++i)
    for (int k = 0; k < x.n; ++k) {
      const cplx v = x(i, k);
      if (v == 0.0) continue;
      for (int j = 0; j < x.n; ++j) z(i, j) += v * y(k, j);
    }
  return z;
}

double norm1(const DenseMatrix& m) {
  double best = 0.0;
  for (int j = 0; j < m.n; ++j) {
    double s = 0.0;
    for (int i = 0; i < m.n; ++i) s += std::abs(m(i, j));
    best = std::max(best, s);
  }
  return best;
}

double max_abs_asymmetry(const DenseMatrix& m) {
  double best = 0.0;
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) best = std::max(best, std::abs(m(i, j) - m(j, i)));
  return best;
}

LuFactor lu_factor(DenseMatrix m) {
  LuFactor f;
  const int n = m.n;
  f.piv.resize(n);
  for (int k = 0; k < n; ++k) {
    int p = k;
    double best = std::abs(m(k, k));
    for (int i = k + 1; i < n; ++i)
      if (std::abs(m(i, k)) > best) {
        best = std::abs(m(i, k));
        p = i;
      }
    f.piv[k] = p;
    if (best == 0.0) {
      f.singular = true;
      continue;
    }
    if (p != k)
      for (int j = 0; j < n; ++j) std::swap(m(k, j), m(p, j));
    const cplx inv = 1.0 / m(k, k);
    for (int i = k + 1; i < n; ++i) {
      const cplx l = m(i, k) * inv;
      m(i, k) = l;
      if (l == 0.0) continue;
      for (int j = k + 1; j < n; ++j) m(i, j) -= l * m(k, j);
    }
  }
  f.lu = std::move(m);
  return f;
}

std::vector<cplx> lu_solve(const LuFactor& f, std::vector<cplx> b) {
  if (f.singular) throw SingularEigenbasis("LU solve with a singular factor");
  const int n = f.lu.n;
  for (int k = 0; k < n; ++k) std::swap(b[k], b[f.piv[k]]);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) b[i] -= f.lu(i, j) * b[j];
  for (int i = n - 1; i >= 0; --i) {
    for (int j = i + 1; j < n; ++j) b[i] -= f.lu(i, j) * b[j];
    b[i] /= f.lu(i, i);
  }
  return b;
}

DenseMatrix lu_inverse(const LuFactor& f) {
  const int n = f.lu.n;
  DenseMatrix inv(n);
  for (int j = 0; j < n; ++j) {
    std::vector<cplx> e(n);
    e[j] = 1.0;
    const auto x = lu_solve(f, e);
    for (int i = 0; i < n; ++i) inv(i, j) = x[i];
  }
  return inv;
}

namespace {

// Householder reduction to upper Hessenberg form, h = q^H m q.
void hessenberg(DenseMatrix& h, DenseMatrix& q) {
  const int n = h.n;
  std::vector<cplx> v(n);
  for (int k = 0; k + 2 < n; ++k) {
    double alpha2 = 0.0;
    for (int i = k + 1; i < n; ++i) alpha2 += std::norm(h(i, k));
    const double alpha = std::sqrt(alpha2);
    if (alpha == 0.0) continue;
    const cplx x0 = h(k + 1, k);
    const cplx phase = std::abs(x0) > 0.0 ? x0 / std::abs(x0) : cplx(1.0);
    std::fill(v.begin(), v.end(), 0.0);
    for (int i = k + 1; i < n; ++i) v[i] = h(i, k);
    v[k + 1] += phase * alpha;
    double vn2 = 0.0;
    for (int i = k + 1; i < n; ++i) vn2 += std::norm(v[i]);
    if (vn2 == 0.0) continue;
    // P = I - 2 v v^H / (v^H v); h <- P h P, q <- q P
    for (int j = 0; j < n; ++j) {
      cplx s = 0.0;
      for (int i = k + 1; i < n; ++i) s += std::conj(v[i]) * h(i, j);
      s *= 2.0 / vn2;
      for (int i = k + 1; i < n; ++i) h(i, j) -= v[i] * s;
    }
    for (int i = 0; i < n; ++i) {
      cplx s = 0.0;
      for (int j = k + 1; j < n; ++j) s += h(i, j) * v[j];
      s *= 2.0 / vn2;
      for (int j = k + 1; j < n; ++j) h(i, j) -= s * std::conj(v[j]);
      cplx t = 0.0;
      for (int j = k + 1; j < n; ++j) t += q(i, j) * v[j];
      t *= 2.0 / vn2;
      for (int j = k + 1; j < n; ++j) q(i, j) -= t * std::conj(v[j]);
    }
    for (int i = k + 2; i < n; ++i) h(i, k) = 0.0;
  }
}

struct Givens {
  double c;
  cplx s;
};

// rotation G with G^H [a; b] = [r; 0]
Givens make_givens(cplx a, cplx b) {
  const double na = std::abs(a);
  const double nb = std::abs(b);
  if (nb == 0.0) return {1.0, 0.0};
  if (na == 0.0) return {0.0, std::conj(b) / nb};
  const double r = std::hypot(na, nb);
  const cplx phase = a / na;
  return {na / r, phase * std::conj(b) / r};
}

cplx wilkinson_shift(cplx a, cplx b, cplx c, cplx d) {
  // eigenvalue of [[a, b], [c, d]] closest to d
  const cplx tr = a + d;
  const cplx det = a * d - b * c;
  const cplx disc = std::sqrt(tr * tr / 4.0 - det);
  const cplx l1 = tr / 2.0 + disc;
  const cplx l2 = tr / 2.0 - disc;
  return std::abs(l1 - d) < std::abs(l2 - d) ? l1 : l2;
}

void schur(DenseMatrix& t, DenseMatrix& z, double tol) {
  const int n = t.n;
  // deflation threshold relative to the neighbouring diagonal, capped by tol
  const double deflate = std::min(tol, std::numeric_limits<double>::epsilon());
  double anorm = 1e-300;
  for (const auto& v : t.a) anorm = std::max(anorm, std::abs(v));
  int hi = n - 1;
  long long sweeps = 0;
  const long long max_sweeps = 100LL * n * n;
  int since_deflation = 0;
  while (hi > 0) {
    int l = hi;
    for (; l > 0; --l) {
      const double scale = std::abs(t(l, l)) + std::abs(t(l - 1, l - 1));
      if (std::abs(t(l, l - 1)) <= deflate * (scale > 0.0 ? scale : anorm)) {
        t(l, l - 1) = 0.0;
        break;
      }
    }
    if (l == hi) {
      --hi;
      since_deflation = 0;
      continue;
    }
    if (++sweeps > max_sweeps) throw NonConvergentQR("shifted QR did not converge");
    ++since_deflation;
    cplx mu;
    if (since_deflation % 11 == 10)
      mu = t(hi, hi) + std::abs(t(hi, hi - 1)) * 0.75;  // exceptional shift
    else
      mu = wilkinson_shift(t(hi - 1, hi - 1), t(hi - 1, hi), t(hi, hi - 1), t(hi, hi));
    // implicit single-shift bulge chase on rows/cols l..hi
    cplx x = t(l, l) - mu;
    cplx y = t(l + 1, l);
    for (int k = l; k < hi; ++k) {
      const Givens g = make_givens(x, y);
      // rows k, k+1: [a; b] <- G^H [a; b]
      for (int j = std::max(l, k - 1); j < n; ++j) {
        const cplx a = t(k, j);
        const cplx b = t(k + 1, j);
        t(k, j) = g.c * a + g.s * b;
        t(k + 1, j) = -std::conj(g.s) * a + g.c * b;
      }
      // columns k, k+1: [a b] <- [a b] G
      const int rmax = std::min(hi, k + 2);
      for (int i = 0; i <= rmax; ++i) {
        const cplx a = t(i, k);
        const cplx b = t(i, k + 1);
        t(i, k) = g.c * a + std::conj(g.s) * b;
        t(i, k + 1) = -g.s * a + g.c * b;
      }
      for (int i = 0; i < n; ++i) {
        const cplx a = z(i, k);
        const cplx b = z(i, k + 1);
        z(i, k) = g.c * a + std::conj(g.s) * b;
        z(i, k + 1) = -g.s * a + g.c * b;
      }
      if (k + 1 < hi) {
        x = t(k + 1, k);
        y = t(k + 2, k);
      }
    }
  }
}

}  // namespace

DenseEigen eig_general(const DenseMatrix& m, double tol) {
  const int n = m.n;
  DenseMatrix t = m;
  DenseMatrix z = DenseMatrix::identity(n);
  hessenberg(t, z);
  schur(t, z, tol);

  DenseEigen out;
  out.values.resize(n);
  for (int i = 0; i < n; ++i) out.values[i] = t(i, i);
  double tnorm = 0.0;
  for (const auto& v : t.a) tnorm = std::max(tnorm, std::abs(v));
  const double small = std::max(tnorm, 1e-300) * 1e-14;

  out.vectors = DenseMatrix(n);
  std::vector<cplx> y(n);
  for (int k = 0; k < n; ++k) {
    std::fill(y.begin(), y.end(), 0.0);
    y[k] = 1.0;
    const cplx lam = t(k, k);
    for (int i = k - 1; i >= 0; --i) {
      cplx s = 0.0;
      for (int j = i + 1; j <= k; ++j) s += t(i, j) * y[j];
      cplx d = t(i, i) - lam;
      if (std::abs(d) < small) d = small;
      y[i] = -s / d;
    }
    double nrm = 0.0;
    std::vector<cplx> x(n, 0.0);
    for (int i = 0; i < n; ++i) {
      cplx acc = 0.0;
      for (int j = 0; j <= k; ++j) acc += z(i, j) * y[j];
      x[i] = acc;
      nrm += std::norm(acc);
    }
    nrm = std::sqrt(nrm);
    for (int i = 0; i < n; ++i) out.vectors(i, k) = x[i] / nrm;
  }
  return out;
}

}  // namespace fns
