#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fns/corrector.hpp"
#include "fns/errors.hpp"
#include "fns/rng.hpp"
#include "oracles.hpp"

using namespace fns;
using std::numbers::pi;

namespace {

void randomize(std::vector<cplx>& v, std::uint64_t seed, double s = 1.0) {
  CounterRng rng(seed);
  for (std::size_t p = 0; p < v.size(); ++p) v[p] = s * cplx(rng.normal(2 * p), rng.normal(2 * p + 1));
}

SpectralCorrector random_conv(const Grid& g, std::uint64_t seed, int depth = 2) {
  SpectralCorrector hc = SpectralCorrector::conv(g, 3, depth);
  randomize(hc.lambda, seed);
  for (std::size_t d = 0; d < hc.kernels.size(); ++d) randomize(hc.kernels[d].taps, seed + 10 + d, 0.5);
  hc.scale = 0.7;
  return hc;
}

SpectralCorrector random_split(const Grid& g, std::uint64_t seed) {
  auto [a, mask] = sample_checkerboard(g, 2, 6, 4);
  (void)a;
  SpectralCorrector p1 = random_conv(g, seed, 1), p2 = random_conv(g, seed + 100, 1);
  p2.scale = 1.3;
  return SpectralCorrector::region_split(mask, p1, p2);
}

Field complex_field(const Grid& g, std::uint64_t seed) {
  Field f(g);
  randomize(f.values, seed);
  return f;
}

double real_inner(const Field& w, const Field& y) { return dot(w, y).real(); }

}  // namespace

TEST_CASE("identity diagonal corrector is the identity map") {
  const Grid g(15);
  SpectralCorrector hc = SpectralCorrector::diagonal(g);
  for (auto& l : hc.lambda) l = 1.0;
  const Field r = complex_field(g, 1);
  CHECK(oracle::max_abs_diff(apply_corrector(hc, r).values, r.values) < 1e-13);
  CHECK(norm2(apply_corrector(hc, Field(g))) == 0.0);
  CHECK(hc.kernels.empty());
}

TEST_CASE("1D Poisson: reciprocal eigenvalues give the fast solver") {
  for (int n : {7, 63}) {
    const Grid g(n, 1);
    SpectralCorrector hc = SpectralCorrector::diagonal(g);
    for (int j = 1; j <= n; ++j) {
      const double lam = poisson1d_eigenvalue(j, g);
      hc.lam(j) = 1.0 / lam;
      hc.lam(g.ex() - j) = 1.0 / lam;
    }
    const Field f = random_field(g, 3);
    const Field u = apply_corrector(hc, f);
    const auto dense = oracle::dense_solve(oracle::poisson1d_dense(n), f.values);
    CHECK(oracle::rel_err(u.values, dense) < 1e-10);
  }
}

TEST_CASE("reciprocal symbol corrector solves constant SPD stencils") {
  const Grid g(31);
    // stencils symmetric under each axis reflection keep odd extensions odd
  for (const auto& s : {laplacian5(g), assemble_anisotropic(1e-2, 0.0, g), assemble_random_diffusion(ElementField(g))}) {
    const SpectralCorrector hc = reciprocal_symbol_corrector(s);
    const Field f = random_field(g, 9);
    const Field u = apply_corrector(hc, f);
    CHECK(norm2(f - apply_stencil(s, u)) / norm2(f) < 1e-9);
  }
}

TEST_CASE("linearity, scale equivariance and the adjoint") {
  const Grid g(15);
  for (const auto& hc : {random_conv(g, 1), random_split(g, 2)}) {
    const Field r = complex_field(g, 5), s = complex_field(g, 6);
    const cplx al(0.4, 1.1), be(-2.0, 0.3);
    const Field lhs = apply_corrector(hc, al * r + be * s);
    const Field rhs = al * apply_corrector(hc, r) + be * apply_corrector(hc, s);
    CHECK(oracle::rel_err(lhs.values, rhs.values) < 1e-12);
    const Field hr = apply_corrector(hc, r);
    const Field hcr = apply_corrector(hc, cplx(4.0) * r);
    CHECK(oracle::rel_err(hcr.values, (cplx(4.0) * hr).values) < 1e-15);

    const Field gg = complex_field(g, 7);
    const cplx l1 = dot(hr, gg);
    const cplx l2 = dot(r, adjoint_apply(hc, gg));
    CHECK(std::abs(l1 - l2) < 1e-11 * std::abs(l1));
    CHECK(norm2(adjoint_apply(hc, Field(g))) == 0.0);
  }
}

TEST_CASE("real diagonal corrector adjoint equals the conjugated apply") {
  const Grid g(15);
  SpectralCorrector hc = SpectralCorrector::diagonal(g);
  CounterRng rng(3);
  // real and even under each reflection of the lattice
  const int ne = g.ex();
  for (int b = 0; b < ne; ++b)
    for (int a = 0; a < ne; ++a) {
      const int ra = std::min(a, (ne - a) % ne), rb = std::min(b, (ne - b) % ne);
      hc.lam(a, b) = rng.normal(static_cast<std::uint64_t>(rb) * ne + ra);
    }
  const Field x = complex_field(g, 8);
  CHECK(oracle::rel_err(adjoint_apply(hc, x).values, apply_corrector(hc, x).values) < 1e-13);
}

TEST_CASE("identity kernel reproduces the diagonal variant") {
  const Grid g(15);
  SpectralCorrector d = SpectralCorrector::diagonal(g);
  randomize(d.lambda, 4);
  SpectralCorrector c = SpectralCorrector::conv(g, 5, 1);
  c.kernels[0] = Kernel::identity(5, 2);
  c.lambda = d.lambda;
  const Field r = complex_field(g, 2);
  CHECK(apply_corrector(c, r).values == apply_corrector(d, r).values);
  CHECK(kernel_unitarity_defect(c) < 1e-15);
}

TEST_CASE("convolution and correlation are adjoint") {
  const Grid g(7);
  Kernel k(5, 2);
  randomize(k.taps, 3);
  ExtendedField x(g), y(g);
  randomize(x.values, 4);
  randomize(y.values, 5);
  const cplx l1 = dot(std::span<const cplx>(convolve(k, x).values), std::span<const cplx>(y.values));
  const cplx l2 = dot(std::span<const cplx>(x.values), std::span<const cplx>(correlate_conj(k, y).values));
  CHECK(std::abs(l1 - l2) < 1e-12 * std::abs(l1));
  // a single offset tap shifts the lattice
  Kernel s(3, 2);
  s.tap(1, 0) = 1.0;
  const ExtendedField z = convolve(s, x);
  for (int b = 0; b < g.ey(); ++b)
    for (int a = 0; a < g.ex(); ++a) CHECK(z(a, b) == x((a - 1 + g.ex()) % g.ex(), b));
}

TEST_CASE("corrector columns") {
  const Grid g(15);
  SpectralCorrector hc = SpectralCorrector::conv(g, 5, 1);
  hc.kernels[0] = Kernel::identity(5, 2);
  for (auto [j, k] : {std::pair{1, 1}, std::pair{4, 9}, std::pair{15, 2}}) {
    const Field psi = corrector_column(hc, j, k);
    const Field mode = sample(g, [&](double x, double y) { return std::sin(j * pi * x) * std::sin(k * pi * y); });
    const double ov = std::abs(dot(psi, mode)) / (norm2(psi) * norm2(mode));
    CHECK(ov > 1 - 1e-12);
    CHECK(std::abs(norm2(psi) - 1.0) < 1e-12);
    // conjugate bins give the same sine mode
    const Field mirror = corrector_column(hc, g.ex() - j, k);
    CHECK(std::abs(std::abs(dot(psi, mirror)) - 1.0) < 1e-12);
  }
  SpectralCorrector twice = hc;
  twice.kernels[0].tap(0, 0) = 2.0;
  const Field a = corrector_column(hc, 3, 5), b = corrector_column(twice, 3, 5);
  CHECK(oracle::max_abs_diff((cplx(2.0) * a).values, b.values) < 1e-14);
  CHECK(norm2(corrector_column(hc, 0, 3)) == 0.0);
  CHECK_THROWS_AS(corrector_column(hc, g.ex(), 0), IndexOutOfRange);
}

TEST_CASE("corrector gradients match central differences") {
  const Grid g(7);
  for (const auto& base : {random_conv(g, 11), random_split(g, 12)}) {
    const Field r = complex_field(g, 20), w = complex_field(g, 21);
    auto loss = [&](const SpectralCorrector& hc) { return real_inner(w, apply_corrector(hc, r)); };
    CorrectorGrad grad = CorrectorGrad::zeros_like(base);
    const Field r_bar = corrector_backward(base, r, w, grad);

    const double eps = 1e-5;
    double worst = 0.0;
    auto check_param = [&](auto get, cplx analytic) {
      SpectralCorrector p = base, m = base;
      get(p) += eps;
      get(m) -= eps;
      const double d_re = (loss(p) - loss(m)) / (2 * eps);
      p = base;
      m = base;
      get(p) += cplx(0, eps);
      get(m) -= cplx(0, eps);
      const double d_im = (loss(p) - loss(m)) / (2 * eps);
      const cplx fd(d_re, d_im);
      worst = std::max(worst, std::abs(fd - analytic) / std::max(1.0, std::abs(fd)));
    };
    const bool split = base.variant == CorrectorVariant::region_split;
    for (int part = 0; part < (split ? 2 : 1); ++part) {
      auto sel = [&, part](SpectralCorrector& hc) -> SpectralCorrector& { return split ? hc.parts[part] : hc; };
      const CorrectorGrad& gp = split ? grad.parts[part] : grad;
      for (std::size_t p = 0; p < base.grid.extended_size(); p += 7)
        check_param([&](SpectralCorrector& hc) -> cplx& { return sel(hc).lambda[p]; }, gp.lambda[p]);
      for (std::size_t d = 0; d < gp.kernels.size(); ++d)
        for (std::size_t t = 0; t < gp.kernels[d].size(); ++t)
          check_param([&](SpectralCorrector& hc) -> cplx& { return sel(hc).kernels[d].taps[t]; }, gp.kernels[d][t]);
    }
    CHECK(worst < 1e-6);

    // the input cotangent is the adjoint applied to w
    CHECK(oracle::rel_err(r_bar.values, adjoint_apply(base, w).values) < 1e-12);
  }
}

TEST_CASE("region split masks outputs") {
  const Grid g(15);
  const SpectralCorrector hc = random_split(g, 30);
  const Field r = complex_field(g, 31);
  const Field out = apply_corrector(hc, r);
  // restricting the input to region 1 leaves region 2 untouched
  Field r1 = r;
  for (std::size_t p = 0; p < g.size(); ++p)
    if (hc.mask.labels[p] != 1) r1.values[p] = 0.0;
  const Field o1 = apply_corrector(hc, r1);
  for (std::size_t p = 0; p < g.size(); ++p)
    if (hc.mask.labels[p] != 1) CHECK(o1.values[p] == cplx(0.0));
  CHECK(norm2(out) > 0.0);
}

TEST_CASE("mean absolute diagonal") {
  const Grid g(15);
  const auto [a, mask] = sample_checkerboard(g, 4, 4, 2);
  const auto s = assemble_jumping(a);
  double s1 = 0, s2 = 0;
  int c1 = 0, c2 = 0;
  for (std::size_t p = 0; p < g.size(); ++p) {
    (mask.labels[p] == 1 ? s1 : s2) += std::abs(s.coeffs[p][C]);
    (mask.labels[p] == 1 ? c1 : c2)++;
  }
  CHECK(mean_abs_diagonal(s) == doctest::Approx((s1 + s2) / (c1 + c2)));
  if (c1 > 0) CHECK(mean_abs_diagonal(s, &mask, 1) == doctest::Approx(s1 / c1));
  if (c2 > 0) CHECK(mean_abs_diagonal(s, &mask, 2) == doctest::Approx(s2 / c2));
}
