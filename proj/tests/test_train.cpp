#include <cmath>
#include <numbers>
#include <utility>

#include "doctest.h"
#include "fns/errors.hpp"
#include "fns/rng.hpp"
#include "fns/train.hpp"
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

std::vector<double> log_coefficient_input(const ElementField& a, const Grid& g) {
  std::vector<double> v(a.values.size());
  for (std::size_t p = 0; p < v.size(); ++p) v[p] = std::log(a.values[p]);
  return resample_to_lattice(v, g.n + 1, g.n + 1, g);
}

std::vector<TrainItem> diffusion_items(const Grid& g, int count, std::uint64_t seed) {
  std::vector<TrainItem> items;
  for (int i = 0; i < count; ++i) {
    const ElementField a = sample_grf_coefficient(g, seed + i);
    TrainItem it;
    it.a = assemble_random_diffusion(a);
    it.b = random_field(g, seed + 1000 + i);
    it.meta_input = log_coefficient_input(a, g);
    items.push_back(std::move(it));
  }
  return items;
}

std::vector<TrainItem> jumping_items(const Grid& g, int count, std::uint64_t seed) {
  std::vector<TrainItem> items;
  for (int i = 0; i < count; ++i) {
    auto [a, mask] = sample_checkerboard(g, 4, 4, seed + i);
    TrainItem it;
    it.a = assemble_jumping(a);
    it.b = random_field(g, seed + 1000 + i);
    std::vector<double> la(a.values.size());
    for (std::size_t p = 0; p < la.size(); ++p) la[p] = std::log10(a.values[p]);
    it.meta_input = resample_to_lattice(la, g.n, g.n, g);
    it.mask = mask;
    items.push_back(std::move(it));
  }
  return items;
}

std::vector<TrainItem> poisson_items(const Grid& g, int count, std::uint64_t seed) {
  std::vector<TrainItem> items;
  for (int i = 0; i < count; ++i) {
    TrainItem it;
    it.a = poisson1d(g);
    it.b = random_field(g, seed + i);
    it.meta_input.assign(g.extended_size(), 0.0);
    items.push_back(std::move(it));
  }
  return items;
}

// Worst relative mismatch between grad . d and a central difference over
// random directions.
double directional_mismatch(const Model& model, ParamVector p, const std::vector<TrainItem>& items,
                            const LossConfig& cfg, int directions, std::uint64_t seed) {
  std::vector<double> grad;
  batch_loss(model, p, items, cfg, &grad);
  const double eps = 1e-5;
  double worst = 0.0;
  for (int t = 0; t < directions; ++t) {
    CounterRng rng(seed, t);
    std::vector<double> d(p.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = rng.normal(i);
    double an = 0.0, dn = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) dn += d[i] * d[i];
    dn = std::sqrt(dn);
    for (auto& x : d) x /= dn;
    for (std::size_t i = 0; i < d.size(); ++i) an += grad[i] * d[i];
    ParamVector pp = p, pm = p;
    for (std::size_t i = 0; i < d.size(); ++i) {
      pp.values[i] += eps * d[i];
      pm.values[i] -= eps * d[i];
    }
    const double fd = (batch_loss(model, pp, items, cfg, nullptr) - batch_loss(model, pm, items, cfg, nullptr)) / (2 * eps);
    worst = std::max(worst, std::abs(fd - an) / std::max(std::abs(fd), 1e-3));
  }
  return worst;
}

void perturb_lambda(ParamVector& p, std::uint64_t seed) {
  for (const auto& s : p.segments) {
    if (!s.name.ends_with("lambda")) continue;
    CounterRng rng(seed, s.offset);
    for (std::size_t i = 0; i < s.length; ++i) p.values[s.offset + i] = 0.5 + 0.3 * rng.normal(i);
  }
}

}  // namespace

TEST_CASE("loss of the exact inverse and of the zero corrector") {
  const Grid g(31, 1);
  const auto a = poisson1d(g);
  const Field b = random_field(g, 4);
  const LossConfig none{{SmootherKind::jacobi, 0.5, 0}, 1};
  CHECK(item_loss(a, b, exact_poisson1d(g), none, nullptr) < 1e-9);

  CorrectorGrad cg = CorrectorGrad::zeros_like(exact_poisson1d(g));
  item_loss(a, b, exact_poisson1d(g), none, &cg);
  double gn = 0.0;
  for (const auto& z : cg.lambda) gn += std::norm(z);
  CHECK(std::sqrt(gn) < 1e-7);

  const SpectralCorrector zero = SpectralCorrector::diagonal(g);
  for (int k : {1, 3, 7}) CHECK(item_loss(a, b, zero, {{SmootherKind::jacobi, 0.5, 0}, k}, nullptr) == 1.0);

  const Grid g2(15);
  const auto s = assemble_random_diffusion(sample_grf_coefficient(g2, 2));
  SpectralCorrector hc = SpectralCorrector::diagonal(g2);
  for (auto& l : hc.lambda) l = 0.1;
  const Field b2 = random_field(g2, 3);
  const LossConfig cfg{{SmootherKind::jacobi, 0.75, 2}, 3};
  const double l1 = item_loss(s, b2, hc, cfg, nullptr);
  const double l2 = item_loss(s, cplx(-37.5) * b2, hc, cfg, nullptr);
  CHECK(std::abs(l1 - l2) < 1e-13 * l1);
  CHECK_THROWS_AS(item_loss(s, Field(g2), hc, cfg, nullptr), ZeroRhs);
}

TEST_CASE("parameter registry") {
  const Grid g(7);
  const Model split(ModelSpec{CorrectorVariant::region_split}, g);
  const ParamVector p = split.init_params(1);
  CHECK(p.has("r1.lambda"));
  CHECK(p.has("r2.kernel0"));
  std::size_t covered = 0;
  for (const auto& s : p.segments) {
    CHECK(s.offset == covered);
    covered += s.length;
  }
  CHECK(covered == p.size());
  ModelSpec ms{CorrectorVariant::conv};
  ms.mode = TrainMode::meta;
  const ParamVector pm = Model(ms, g).init_params(1);
  CHECK(pm.has("meta_lambda.w1"));
  CHECK(pm.has("meta_t.c"));
  CHECK(!pm.has("lambda"));
  CHECK_THROWS_AS(p.segment("nope"), ValidationError);
}

TEST_CASE("gradients match central differences for every variant") {
  const Grid g(15);
  const LossConfig cfg{{SmootherKind::jacobi, 0.75, 2}, 2};
  const auto diff = diffusion_items(g, 2, 10);
  const auto jump = jumping_items(g, 2, 20);

  SUBCASE("diagonal") {
    const Model m(ModelSpec{CorrectorVariant::diagonal}, g);
    ParamVector p = m.init_params(3);
    perturb_lambda(p, 4);
    CHECK(directional_mismatch(m, p, diff, cfg, 20, 5) < 1e-5);
    // kernel-free model: every gradient entry belongs to lambda
    CHECK(p.segments.size() == 1);
  }
  SUBCASE("conv") {
    const Model m(ModelSpec{CorrectorVariant::conv, 3, 2}, g);
    ParamVector p = m.init_params(3);
    perturb_lambda(p, 6);
    CHECK(directional_mismatch(m, p, diff, cfg, 20, 7) < 1e-5);
  }
  SUBCASE("region split") {
    const Model m(ModelSpec{CorrectorVariant::region_split, 3, 1}, g);
    ParamVector p = m.init_params(3);
    perturb_lambda(p, 8);
    CHECK(directional_mismatch(m, p, jump, cfg, 20, 9) < 1e-5);
  }
  SUBCASE("meta") {
    ModelSpec ms{CorrectorVariant::conv, 3, 1};
    ms.mode = TrainMode::meta;
    ms.lambda_kernel = 3;
    const Model m(ms, g);
    ParamVector p = m.init_params(3);
    // lift the second layer so the lambda output is not negligible
    for (auto& w : p.view("meta_lambda.w2")) w *= 300.0;
    for (auto& w : p.view("meta_t.a")) w *= 100.0;
    CHECK(directional_mismatch(m, p, diff, cfg, 20, 11) < 1e-5);
  }
}

TEST_CASE("unused kernels receive no gradient in the diagonal variant") {
  const Grid g(7);
  SpectralCorrector hc = SpectralCorrector::conv(g, 3, 1);
  hc.kernels[0] = Kernel::identity(3, 2);
  for (auto& l : hc.lambda) l = 0.05;
  const SpectralCorrector d = [&] {
    SpectralCorrector x = SpectralCorrector::diagonal(g);
    x.lambda = hc.lambda;
    return x;
  }();
  CorrectorGrad cg = CorrectorGrad::zeros_like(d);
  item_loss(laplacian5(g), random_field(g, 1), d, {{SmootherKind::jacobi, 0.75, 1}, 2}, &cg);
  CHECK(cg.kernels.empty());
}

TEST_CASE("Adam") {
  std::vector<double> p = {1.0, -2.0, 3.0};
  AdamState st;
  adam_step(p, {0.0, 0.0, 0.0}, st, 0.1);
  CHECK(p == std::vector<double>{1.0, -2.0, 3.0});

  AdamState s1;
  std::vector<double> q = {0.0, 0.0, 0.0};
  const std::vector<double> gr = {0.5, -4.0, 1e-3};
  adam_step(q, gr, s1, 0.01);
  for (std::size_t i = 0; i < q.size(); ++i)
    CHECK(q[i] == doctest::Approx(-0.01 * gr[i] / (std::abs(gr[i]) + 1e-8)).epsilon(1e-12));

  AdamState s2 = s1, s3 = s1;
  std::vector<double> a = q, b = q;
  adam_step(a, gr, s2, 0.01);
  adam_step(b, gr, s3, 0.01);
  CHECK(a == b);
  CHECK(s2.m == s3.m);
  CHECK_THROWS_AS(adam_step(a, {1.0}, s2, 0.01), ShapeMismatch);
}

TEST_CASE("learning rate and iteration schedules") {
  TrainConfig cfg;
  CHECK(scheduled_lr(cfg, 1) == 1e-4);
  CHECK(scheduled_lr(cfg, 100) == 1e-4);
  CHECK(scheduled_lr(cfg, 101) == 0.5e-4);
  CHECK(scheduled_lr(cfg, 201) == 0.25e-4);
  CHECK(scheduled_k(cfg, 100) == cfg.K);
  CHECK(scheduled_k(cfg, 101) == cfg.K + 1);
  cfg.k_max = 2;
  CHECK(scheduled_k(cfg, 1000) == 2);
}

TEST_CASE("direct training on 1D Poisson recovers the smooth eigenvalues") {
  const Grid g(31, 1);
  const auto items = poisson_items(g, 8, 40);
  const Model model(ModelSpec{CorrectorVariant::diagonal}, g);
  TrainConfig cfg;
  cfg.K = 1;
  cfg.M = 1;
  cfg.omega = 2.0 / 3.0;
  cfg.batch = 4;
  cfg.epochs = 250;
  cfg.lr = 1.0;
  cfg.lr_halving_period = 100;
  cfg.k_increase_period = 1000;
  const TrainResult res = train(model, items, cfg);
  CHECK(res.history.back().loss < 0.1);

  const SpectralCorrector hc = model.build(res.params, items[0]);
  double worst = 0.0;
  for (int m = 1; m < g.ex(); ++m) {
    const double th = lattice_theta(m, g.ex());
    if (std::abs(th) >= pi / 2) continue;
    const int j = m <= g.n ? m : g.ex() - m;
    const cplx eff = hc.scale * hc.lam(m);
    worst = std::max(worst, std::abs(eff * poisson1d_eigenvalue(j, g) - 1.0));
  }
  CHECK(worst < 0.2);
}

TEST_CASE("meta mode fits a single item") {
  const Grid g(15);
  const auto items = diffusion_items(g, 1, 70);
  TrainConfig cfg;
  cfg.K = 1;
  cfg.M = 2;
  cfg.omega = 0.75;
  cfg.batch = 1;
  cfg.epochs = 300;
  cfg.lr_halving_period = 100;
  cfg.k_increase_period = 1000;
  cfg.lr = 0.5;
  const Model direct(ModelSpec{CorrectorVariant::diagonal}, g);
  const double ld = train(direct, items, cfg).history.back().loss;
  ModelSpec ms{CorrectorVariant::diagonal};
  ms.mode = TrainMode::meta;
  ms.lambda_kernel = 3;
  cfg.lr = 0.05;
  const Model meta(ms, g);
  const TrainResult rm = train(meta, items, cfg);
  const double lm = rm.history.back().loss;
  MESSAGE("direct " << ld << " meta " << lm);
  // the compact meta map cannot reproduce the per-bin table the direct mode
  // learns; it must still cut the loss by more than an order of magnitude
  CHECK(lm < 0.05 * rm.history.front().loss);
  CHECK(lm < 10 * ld);
}

TEST_CASE("training is deterministic across thread counts") {
  const Grid g(7);
  const auto items = diffusion_items(g, 6, 90);
  const Model model(ModelSpec{CorrectorVariant::conv, 3, 1}, g);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch = 4;
  cfg.lr = 0.05;
  const TrainResult a = train(model, items, cfg);
  const TrainResult b = train(model, items, cfg);
  cfg.threads = 3;
  const TrainResult c = train(model, items, cfg);
  CHECK(a.params.values == b.params.values);
  CHECK(a.params.values == c.params.values);
  for (std::size_t e = 0; e < a.history.size(); ++e) CHECK(a.history[e].loss == c.history[e].loss);
  CHECK_THROWS_AS(train(model, std::span<const TrainItem>{}, cfg), ValidationError);
}

TEST_CASE("parameter transfer between grids") {
  const Grid g15(15), g31(31);
  const Model m(ModelSpec{CorrectorVariant::conv, 3, 1}, g15);
  ParamVector p = m.init_params(2);
  auto lam = p.view("lambda");
  for (std::size_t q = 0; q < lam.size() / 2; ++q) {
    lam[2 * q] = 2.5;
    lam[2 * q + 1] = -1.0;
  }
  const ParamVector t = transfer_params(p, g15, g31);
  CHECK(t.view("lambda").size() == 2 * g31.extended_size());
  for (std::size_t q = 0; q < g31.extended_size(); ++q) {
    CHECK(t.view("lambda")[2 * q] == doctest::Approx(2.5));
    CHECK(t.view("lambda")[2 * q + 1] == doctest::Approx(-1.0));
  }
  const auto k0 = std::as_const(p).view("kernel0");
  const auto k1 = t.view("kernel0");
  CHECK(std::equal(k0.begin(), k0.end(), k1.begin(), k1.end()));
  // a bin that exists on both lattices at the same theta keeps its value
  ParamVector r = m.init_params(2);
  CounterRng rng(5);
  for (std::size_t i = 0; i < r.view("lambda").size(); ++i) r.view("lambda")[i] = rng.normal(i);
  const ParamVector rt = transfer_params(r, g15, g31);
  for (int m1 = 0; m1 < g15.ex(); m1 += 3)
    for (int m2 = 0; m2 < g15.ey(); m2 += 5) {
      const std::size_t qs = g15.extended_index(m1, m2);
      const int n1 = m1 < g15.ex() / 2 ? 2 * m1 : g31.ex() - 2 * (g15.ex() - m1);
      const int n2 = m2 < g15.ey() / 2 ? 2 * m2 : g31.ey() - 2 * (g15.ey() - m2);
      const std::size_t qt = g31.extended_index(n1, n2);
      CHECK(rt.view("lambda")[2 * qt] == doctest::Approx(r.view("lambda")[2 * qs]));
    }
}
