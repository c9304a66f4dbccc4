#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fns/errors.hpp"
#include "fns/hybrid.hpp"
#include "oracles.hpp"

using namespace fns;

namespace {

SpectralCorrector exact_poisson1d(const Grid& g) {
  SpectralCorrector hc = SpectralCorrector::diagonal(g);
  for (int j = 1; j <= g.n; ++j) {
    const double lam = poisson1d_eigenvalue(j, g);
    hc.lam(j) = 1.0 / lam;
    hc.lam(g.ex() - j) = 1.0 / lam;
  }
  return hc;
}

// Dense matrix of a linear map on fields, probed column by column.
template <class Map>
std::vector<cplx> probe(const Grid& g, Map&& map) {
  const std::size_t n = g.size();
  std::vector<cplx> m(n * n);
  for (std::size_t c = 0; c < n; ++c) {
    Field e(g);
    e.values[c] = 1.0;
    const Field y = map(e);
    for (std::size_t r = 0; r < n; ++r) m[r * n + c] = y.values[r];
  }
  return m;
}

std::vector<cplx> matmul(const std::vector<cplx>& a, const std::vector<cplx>& b, std::size_t n) {
  std::vector<cplx> c(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < n; ++j) c[i * n + j] += a[i * n + k] * b[k * n + j];
  return c;
}

// Corrector built from the reciprocal symbol of the unit-coefficient stencil,
// rescaled by the mean diagonal of the variable problem.
SpectralCorrector mean_field_corrector(const Stencil9Field& a) {
  SpectralCorrector hc = reciprocal_symbol_corrector(assemble_random_diffusion(ElementField(a.grid)));
  hc.scale = (8.0 / 3.0) / mean_abs_diagonal(a);
  return hc;
}

}  // namespace

TEST_CASE("exact corrector converges in one outer step") {
  const Grid g(31, 1);
  const Field f = random_field(g, 2);
  const SolveReport rep = hybrid_solve(poisson1d(g), f, {SmootherKind::jacobi, 0.5, 0}, exact_poisson1d(g),
                                       {1e-10, 500});
  CHECK(rep.converged);
  CHECK(rep.iterations == 1);
  CHECK(rep.residual_history.size() == 2);
  CHECK(rep.residual_history[0] == doctest::Approx(norm2(f)));
  CHECK(rep.residual_history[1] / rep.residual_history[0] < 1e-10);
}

TEST_CASE("zero right-hand side takes no iterations") {
  const Grid g(15);
  const SolveReport rep = hybrid_solve(laplacian5(g), Field(g), {}, SpectralCorrector::diagonal(g));
  CHECK(rep.converged);
  CHECK(rep.iterations == 0);
  CHECK(norm2(rep.solution) == 0.0);
}

TEST_CASE("pure Jacobi on the 5-point Laplacian is slow") {
  const Grid g(31);
  const SmootherSpec jac{SmootherKind::jacobi, 0.75, 1};
  const SolveReport rep = hybrid_solve(laplacian5(g), make_rhs(RhsKind::f3, g, nullptr, 0), jac,
                                       SpectralCorrector::diagonal(g));
  CHECK(!rep.converged);
  CHECK(rep.status == SolveStatus::max_iterations);
  CHECK(rep.iterations > 200);
  // asymptotic rate is the spectral radius of the Jacobi propagator
  const double rho = 1 - 0.75 * (1 - std::cos(std::numbers::pi * g.h()));
  CHECK(rep.contraction_estimate == doctest::Approx(rho).epsilon(1e-4));
  CHECK_THROWS_AS(hybrid_solve(laplacian5(g), make_rhs(RhsKind::f3, g, nullptr, 0), jac,
                               SpectralCorrector::diagonal(g), {1e-6, 20, 10.0, 5, true}),
                  MaxIterations);
}

TEST_CASE("divergence guard") {
  const Grid g(15);
  SpectralCorrector bad = SpectralCorrector::diagonal(g);
  for (auto& l : bad.lambda) l = 5.0;
  const Field f = random_field(g, 3);
  const SolveReport rep = hybrid_solve(laplacian5(g), f, {SmootherKind::jacobi, 0.75, 0}, bad);
  CHECK(rep.status == SolveStatus::diverged);
  CHECK(rep.iterations < 50);
  SolveOptions o;
  o.throw_on_failure = true;
  CHECK_THROWS_AS(hybrid_solve(laplacian5(g), f, {SmootherKind::jacobi, 0.75, 0}, bad, o), Diverged);
  CHECK_THROWS_AS(hybrid_solve(laplacian5(g), f, {}, bad, {0.0}), ValidationError);
}

TEST_CASE("residual history is recomputed from scratch") {
  const Grid g(15);
  const auto a = assemble_random_diffusion(sample_grf_coefficient(g, 4));
  const Field f = random_field(g, 5);
  const SolveReport rep = hybrid_solve(a, f, {SmootherKind::jacobi, 0.75, 2}, mean_field_corrector(a), {1e-8, 500});
  CHECK(rep.converged);
  const double direct = norm2(f - apply_stencil(a, rep.solution));
  CHECK(std::abs(direct - rep.residual_history.back()) < 1e-10 * direct);
  for (std::size_t k = 1; k < rep.residual_history.size(); ++k) CHECK(rep.residual_history[k] > 0.0);
}

TEST_CASE("one outer step applies the dense error propagator") {
  const Grid g(7);
  const auto a = assemble_random_diffusion(sample_grf_coefficient(g, 6));
  SpectralCorrector hc = mean_field_corrector(a);
  const SmootherSpec sm{SmootherKind::jacobi, 0.75, 3};
  const std::size_t n = g.size();
  const auto ad = oracle::stencil_dense(a);
  const auto hd = probe(g, [&](const Field& x) { return apply_corrector(hc, x); });
  std::vector<cplx> id(n * n), bj(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    id[i * n + i] = 1.0;
    bj[i * n + i] = 0.75 / a.coeffs[i][C];
  }
  auto minus = [&](const std::vector<cplx>& x) {
    std::vector<cplx> y(n * n);
    for (std::size_t i = 0; i < n * n; ++i) y[i] = id[i] - x[i];
    return y;
  };
  const auto eb = minus(matmul(bj, ad, n));
  const auto eh = minus(matmul(hd, ad, n));
  auto e = matmul(eh, matmul(eb, matmul(eb, eb, n), n), n);

  const Field ustar = random_field(g, 7);
  const Field f = apply_stencil(a, ustar);
  const SolveReport rep = hybrid_solve(a, f, sm, hc, {1e-300, 1});
  const Field err = ustar - rep.solution;
  const auto pred = oracle::matvec(e, ustar.values);
  CHECK(oracle::max_abs_diff(err.values, pred) < 1e-11 * norm2(ustar));
}

TEST_CASE("contraction estimate") {
  std::vector<double> h = {1.0};
  for (int k = 0; k < 12; ++k) h.push_back(h.back() * (k < 6 ? 0.9 : 0.25));
  CHECK(contraction_from_history(h) == doctest::Approx(0.25));
  CHECK(contraction_from_history({1.0, 0.5}) == doctest::Approx(0.5));
  CHECK(contraction_from_history({1.0}) == 0.0);
}

TEST_CASE("right-hand side study") {
  const Grid g(15);
  const auto a = assemble_random_diffusion(sample_grf_coefficient(g, 8));
  const SpectralCorrector hc = mean_field_corrector(a);
  const SmootherSpec sm{SmootherKind::jacobi, 0.75, 2};
  const SolveOptions o{1e-10, 500};
  const RhsStudy s1 = rhs_independence_study(a, hc, sm, {RhsKind::f3}, 1.0, 0, o);
  const RhsStudy s2 = rhs_independence_study(a, hc, sm, {RhsKind::f3}, 1e6, 0, o);
  CHECK(s1.rows[0].iterations == s2.rows[0].iterations);
  const RhsStudy all = rhs_independence_study(a, hc, sm, {RhsKind::f1, RhsKind::f2, RhsKind::f3, RhsKind::f4}, 1.0, 9, o);
  const RhsStudy again = rhs_independence_study(a, hc, sm, {RhsKind::f4}, 1.0, 9, o);
  CHECK(all.rows[3].iterations == again.rows[0].iterations);
  CHECK(all.rows[3].contraction == again.rows[0].contraction);
  double lo = 1e300, hi = 0;
  for (const auto& r : all.rows) {
    CHECK(r.converged);
    lo = std::min(lo, r.contraction);
    hi = std::max(hi, r.contraction);
  }
  CHECK(all.spread == doctest::Approx(hi / lo - 1));

  // oracle: the asymptotic rate is the dominant modulus of the error propagator
  Field e = random_field(g, 4);
  double rate = 0.0;
  for (int k = 0; k < 400; ++k) {
    const Field half = error_propagation_apply(sm, a, e);
    const Field next = half - apply_corrector(hc, apply_stencil(a, half));
    rate = norm2(next) / norm2(e);
    e = (1.0 / norm2(next)) * next;
  }
  for (const auto& r : all.rows) CHECK(r.contraction == doctest::Approx(rate).epsilon(1e-2));
}

TEST_CASE("scale sweep") {
  const ItemFactory items = [](const Grid& g, int mu) {
    TrainItem it;
    it.a = assemble_random_diffusion(sample_grf_coefficient(g, 100 + mu));
    it.b = random_field(g, 200 + mu);
    return it;
  };
  const CorrectorFactory corr = [](const TrainItem& it) { return mean_field_corrector(it.a); };
  const SmootherSpec sm{SmootherKind::jacobi, 0.75, 2};
  const auto rows = sweep_scales(items, corr, sm, {15, 31}, 3);
  CHECK(rows.size() == 6);
  for (const auto& r : rows) {
    const TrainItem it = items(Grid(r.scale), r.mu_id);
    const SolveReport rep = hybrid_solve(it.a, it.b, sm, corr(it));
    CHECK(rep.iterations == r.iterations);
    CHECK(r.converged);
  }
  const auto sum = summarize_sweep(rows);
  REQUIRE(sum.size() == 2);
  CHECK(sum[0].scale == 15);
  double mean = 0;
  for (int i = 0; i < 3; ++i) mean += rows[i].iterations / 3.0;
  CHECK(sum[0].mean == doctest::Approx(mean));
  CHECK(sum[0].std >= 0.0);
}
