#include "fns/hybrid.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include "fns/errors.hpp"

namespace fns {

double contraction_from_history(const std::vector<double>& h, int window) {
  const int n = static_cast<int>(h.size()) - 1;
  if (n < 1) return 0.0;
  const int w = std::min(window, n);
  if (h[n - w] <= 0.0) return 0.0;
  return std::pow(h[n] / h[n - w], 1.0 / w);
}

SolveReport hybrid_solve(const Stencil9Field& a, const Field& f, const SmootherSpec& smoother,
                         const SpectralCorrector& hc, const SolveOptions& opts) {
  if (!(opts.tol > 0.0)) throw ValidationError("tolerance must be positive");
  require_same_grid(a.grid, f.grid, "hybrid_solve");
  const auto t0 = std::chrono::steady_clock::now();
  SolveReport rep;
  rep.solution = Field(f.grid);
  const double nf = norm2(f);
  rep.residual_history.push_back(nf);
  auto finish = [&] {
    rep.contraction_estimate = contraction_from_history(rep.residual_history);
    rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  if (nf == 0.0) {
    rep.converged = true;
    rep.status = SolveStatus::converged;
    finish();
    return rep;
  }
  Field& u = rep.solution;
  int above = 0;
  for (int k = 1; k <= opts.maxit; ++k) {
    u = smooth(smoother, a, u, f);
    const Field r = f - apply_stencil(a, u);
    axpy(1.0, apply_corrector(hc, r), u);
    const double nr = norm2(f - apply_stencil(a, u));
    rep.residual_history.push_back(nr);
    rep.iterations = k;
    if (nr / nf < opts.tol) {
      rep.converged = true;
      rep.status = SolveStatus::converged;
      break;
    }
    above = (!std::isfinite(nr) || nr / nf > opts.divergence_factor) ? above + 1 : 0;
    if (above >= opts.divergence_window) {
      rep.status = SolveStatus::diverged;
      break;
    }
  }
  finish();
  if (opts.throw_on_failure) {
    if (rep.status == SolveStatus::diverged)
      throw Diverged("hybrid iteration diverged after " + std::to_string(rep.iterations) + " steps");
    if (rep.status == SolveStatus::max_iterations)
      throw MaxIterations("no convergence within " + std::to_string(opts.maxit) + " iterations");
  }
  return rep;
}

std::vector<SweepRow> sweep_scales(const ItemFactory& items, const CorrectorFactory& correctors,
                                   const SmootherSpec& smoother, const std::vector<int>& scales,
                                   int samples, const SolveOptions& opts, int dim) {
  std::vector<SweepRow> rows;
  for (int n : scales) {
    const Grid g(n, dim);
    for (int mu = 0; mu < samples; ++mu) {
      const TrainItem item = items(g, mu);
      const SpectralCorrector hc = correctors(item);
      const SolveReport rep = hybrid_solve(item.a, item.b, smoother, hc, opts);
      rows.push_back({n, mu, rep.iterations, rep.contraction_estimate, rep.converged});
    }
  }
  return rows;
}

std::vector<SweepSummary> summarize_sweep(const std::vector<SweepRow>& rows) {
  std::map<int, std::vector<double>> by_scale;
  for (const auto& r : rows) by_scale[r.scale].push_back(r.iterations);
  std::vector<SweepSummary> out;
  for (const auto& [n, v] : by_scale) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    out.push_back({n, mean, std::sqrt(var / static_cast<double>(v.size()))});
  }
  return out;
}

namespace {

// Residual norms of the same error recurrence carried past the rounding
// floor: each segment restarts from zero on the current residual, which
// leaves the error sequence unchanged while keeping f - A u accurate.
std::vector<double> deep_history(const Stencil9Field& a, const Field& f, const SmootherSpec& smoother,
                                 const SpectralCorrector& hc, int maxit) {
  constexpr double segment_tol = 1e-6;
  constexpr double depth = 1e-30;
  std::vector<double> h{norm2(f)};
  if (h[0] == 0.0) return h;
  Field r = f;
  while (static_cast<int>(h.size()) <= maxit && h.back() > depth * h[0]) {
    SolveOptions seg;
    seg.tol = segment_tol;
    seg.maxit = maxit + 1 - static_cast<int>(h.size());
    const SolveReport rep = hybrid_solve(a, r, smoother, hc, seg);
    // r - A delta is the residual of the accumulated solution
    h.back() = rep.residual_history[0];
    h.insert(h.end(), rep.residual_history.begin() + 1, rep.residual_history.end());
    if (rep.status != SolveStatus::converged) break;
    r = r - apply_stencil(a, rep.solution);
  }
  return h;
}

}  // namespace

RhsStudy rhs_independence_study(const Stencil9Field& a, const SpectralCorrector& hc,
                                const SmootherSpec& smoother, const std::vector<RhsKind>& kinds,
                                double rhs_scale, std::uint64_t seed, const SolveOptions& opts) {
  RhsStudy study;
  double lo = 0.0;
  double hi = 0.0;
  for (RhsKind kind : kinds) {
    const Field f = cplx(rhs_scale) * make_rhs(kind, a.grid, &a, seed);
    const SolveReport rep = hybrid_solve(a, f, smoother, hc, opts);
    const double rate = contraction_from_history(deep_history(a, f, smoother, hc, opts.maxit));
    study.rows.push_back({kind, rep.iterations, rate, rep.converged});
    if (study.rows.size() == 1) {
      lo = hi = rate;
    } else {
      lo = std::min(lo, rate);
      hi = std::max(hi, rate);
    }
  }
  study.spread = lo > 0.0 ? hi / lo - 1.0 : 0.0;
  return study;
}

}  // namespace fns
