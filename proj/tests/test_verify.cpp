#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fns/errors.hpp"
#include "fns/verify.hpp"
#include "oracles.hpp"

using namespace fns;
using std::numbers::pi;

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

// A short direct-mode training run on random diffusion at N = 15.
SpectralCorrector trained_diffusion_corrector(const Grid& g, const Stencil9Field& target) {
  std::vector<TrainItem> items;
  for (int i = 0; i < 8; ++i) {
    TrainItem it;
    it.a = assemble_random_diffusion(sample_grf_coefficient(g, 300 + i));
    it.b = random_field(g, 400 + i);
    items.push_back(std::move(it));
  }
  const Model model(ModelSpec{CorrectorVariant::diagonal}, g);
  TrainConfig cfg;
  cfg.K = 1;
  cfg.M = 2;
  cfg.omega = 0.75;
  cfg.batch = 4;
  cfg.epochs = 150;
  cfg.lr = 0.5;
  cfg.lr_halving_period = 50;
  cfg.k_increase_period = 1000;
  const TrainResult res = train(model, items, cfg);
  TrainItem probe;
  probe.a = target;
  return model.build(res.params, probe);
}

}  // namespace

TEST_CASE("dense eigensolver reproduces the analytic 1D spectrum") {
  const Grid g(7, 1);
  const EigenSystem eig = dense_eig(poisson1d(g));
  REQUIRE(eig.values.size() == 7);
  const double h = g.h();
  for (int j = 1; j <= 7; ++j) {
    const double lam = 4 / (h * h) * std::pow(std::sin(pi * h * j / 2), 2);
    CHECK(std::abs(eig.values[j - 1] - cplx(lam)) < 1e-10);
    // analytic eigenvector sin(j pi x), unit normalised, compared up to sign
    std::vector<cplx> xi(7);
    double nrm = 0;
    for (int i = 0; i < 7; ++i) {
      xi[i] = std::sin(j * pi * (i + 1) * h);
      nrm += std::norm(xi[i]);
    }
    cplx ov = 0;
    for (int i = 0; i < 7; ++i) ov += std::conj(xi[i]) * eig.vectors(i, j - 1);
    const cplx phase = ov / std::abs(ov);
    double err = 0;
    for (int i = 0; i < 7; ++i) err = std::max(err, std::abs(eig.vectors(i, j - 1) - phase * xi[i] / std::sqrt(nrm)));
    CHECK(err < 1e-8);
  }
  CHECK(eig.max_residual < 1e-8);
}

TEST_CASE("dense eigensolver on 2D operators") {
  const Grid g(7);
  SUBCASE("5-point Laplacian is a tensor sum") {
    const EigenSystem eig = dense_eig(laplacian5(g, true));
    std::vector<double> expect;
    const Grid g1(7, 1);
    for (int j = 1; j <= 7; ++j)
      for (int k = 1; k <= 7; ++k) expect.push_back(poisson1d_eigenvalue(j, g1) + poisson1d_eigenvalue(k, g1));
    std::sort(expect.begin(), expect.end());
    for (std::size_t i = 0; i < expect.size(); ++i) CHECK(std::abs(eig.values[i] - cplx(expect[i])) < 1e-9);
  }
  SUBCASE("diagonal stencil") {
    Stencil9Field s(g);
    std::vector<double> d;
    for (std::size_t p = 0; p < g.size(); ++p) {
      s.coeffs[p][C] = 1.0 + 0.37 * p;
      d.push_back(1.0 + 0.37 * p);
    }
    const EigenSystem eig = dense_eig(s);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(std::abs(eig.values[i] - cplx(d[i])) < 1e-12);
  }
  SUBCASE("non-normal convection operator") {
    const auto s = assemble_convection_diffusion(1e-2, 0.6, 0.8, g);
    const EigenSystem eig = dense_eig(s);
    CHECK(eig.max_residual < 1e-8);
    CHECK(std::isfinite(eig.condition));
    for (std::size_t i = 1; i < eig.values.size(); ++i) CHECK(std::abs(eig.values[i]) >= std::abs(eig.values[i - 1]));
  }
  SUBCASE("random diffusion residuals") {
    const auto s = assemble_random_diffusion(sample_grf_coefficient(Grid(15), 3));
    const EigenSystem eig = dense_eig(s);
    CHECK(eig.max_residual < 1e-8);
    for (const auto& v : eig.values) CHECK(std::abs(v.imag()) < 1e-8 * std::abs(v));
  }
  CHECK_THROWS_AS(dense_eig(laplacian5(Grid(63))), DomainError);
}

TEST_CASE("QR iteration against a known general matrix") {
  // companion matrix of (x - 1)(x - 2)(x + 3) = x^3 - 7x + 6
  DenseMatrix m(3);
  m(0, 0) = 0, m(0, 1) = 7, m(0, 2) = -6;
  m(1, 0) = 1, m(2, 1) = 1;
  const DenseEigen e = eig_general(m);
  std::vector<double> re;
  for (const auto& v : e.values) re.push_back(v.real());
  std::sort(re.begin(), re.end());
  CHECK(re[0] == doctest::Approx(-3.0).epsilon(1e-12));
  CHECK(re[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(re[2] == doctest::Approx(2.0).epsilon(1e-12));
  // rotation has eigenvalues +-i
  DenseMatrix r(2);
  r(0, 1) = -1.0;
  r(1, 0) = 1.0;
  const DenseEigen er = eig_general(r);
  for (const auto& v : er.values) CHECK(std::abs(std::abs(v.imag()) - 1.0) < 1e-12);
}

TEST_CASE("expansion coefficients") {
  SUBCASE("1D Poisson sine frequencies have single-index support") {
    const Grid g(7, 1);
    const EigenSystem eig = dense_eig(poisson1d(g));
    for (int j = 1; j <= 7; ++j) CHECK(expansion_coefficients(eig, j).support.size() == 1);
    CHECK(expansion_coefficients(eig, 3, 0, 0.0).support.size() == 7);
  }
  SUBCASE("constant stencil frequencies stay within the conjugate quartet") {
    const Grid g(7);
    const EigenSystem eig = dense_eig(assemble_anisotropic(0.37, 0.0, g));
    for (int m2 = 1; m2 < g.ey(); m2 += 3)
      for (int m1 = 1; m1 < g.ex(); m1 += 2) {
        if (m1 == g.n + 1 || m2 == g.n + 1) continue;
        CHECK(expansion_coefficients(eig, m1, m2).support.size() <= 4);
      }
    // reconstruct phi from the coefficients
    const Expansion ex = expansion_coefficients(eig, 3, 5, 0.0);
    const Field phi = fourier_mode(g, 3, 5);
    std::vector<cplx> back(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t c = 0; c < g.size(); ++c) back[i] += eig.vectors(i, c) * ex.t[c];
    CHECK(oracle::rel_err(back, phi.values) < 1e-10);
    CHECK(std::abs(norm2(phi) - 1.0) < 1e-14);
  }
}

TEST_CASE("corrector eigen errors") {
  const Grid g(15, 1);
  const EigenSystem eig = dense_eig(poisson1d(g));
  for (double l : corrector_eigen_errors(exact_poisson1d(g), eig)) CHECK(l < 1e-9);
  for (double l : corrector_eigen_errors(SpectralCorrector::diagonal(g), eig)) CHECK(l == doctest::Approx(1.0));
}

TEST_CASE("theorem rate") {
  const double eta = theorem_eta(0.5, 0.01, 10, 4.0, 0.01);
  const double expect = std::sqrt(std::max(2 * std::pow(0.5, 20) * 4, 2 * std::pow(1.01, 20) * 0.01));
  CHECK(eta == doctest::Approx(expect).epsilon(1e-15));
  CHECK(std::abs(eta - 0.1562) < 5e-5);
}

TEST_CASE("audit of the exact 1D corrector") {
  const Grid g(15, 1);
  const SmootherSpec sm{SmootherKind::jacobi, 2.0 / 3.0, 2};
  const AssumptionReport r = audit(poisson1d(g), sm, exact_poisson1d(g));
  CHECK(r.mu_h < 1e-15);
  CHECK(r.eta == doctest::Approx(std::sqrt(2 * std::pow(r.mu_b, 4) * r.c_bound)));
  CHECK(r.max_support == 1);
  CHECK(r.empirical < 1e-6);
  CHECK(r.bound_honored);
  CHECK(!r.unreliable);
  std::size_t nh = 0, nb = 0;
  for (const auto& row : r.rows) (row.label == FreqLabel::H ? nh : nb)++;
  CHECK(nh + nb == r.rows.size());
  CHECK(format_report(r).find("eta") != std::string::npos);
}

TEST_CASE("audit of a trained random-diffusion corrector") {
  const Grid g(15);
  const auto a = assemble_random_diffusion(sample_grf_coefficient(g, 999));
  const SpectralCorrector hc = trained_diffusion_corrector(g, a);
  const SmootherSpec sm{SmootherKind::jacobi, 0.75, 2};
  const AssumptionReport r = audit(a, sm, hc);
  MESSAGE(format_report(r));
  CHECK(r.mu_b < 1.0);
  CHECK(r.mean_l_h < r.mean_l_b);
  CHECK(r.l_norms.size() == g.size());
  CHECK(r.empirical < 1.0);
  // the bound either holds or the report shows the breached assumption
  CHECK((r.bound_honored || r.max_support > 4 || r.unreliable));
}
