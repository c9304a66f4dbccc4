#pragma once

#include <functional>
#include <vector>

#include "fns/train.hpp"

namespace fns {

enum class SolveStatus { converged, max_iterations, diverged };

struct SolveReport {
  int iterations = 0;
  /// ||f - A u^k||, entry 0 is ||f|| (zero initial guess).
  std::vector<double> residual_history;
  bool converged = false;
  SolveStatus status = SolveStatus::max_iterations;
  /// Geometric mean of the last five residual ratios.
  double contraction_estimate = 0.0;
  double wall_time_s = 0.0;
  Field solution;
};

struct SolveOptions {
  double tol = 1e-6;
  int maxit = 500;
  double divergence_factor = 10.0;
  int divergence_window = 5;
  /// Throw Diverged / MaxIterations instead of returning the report.
  bool throw_on_failure = false;
};

/// u <- smooth^M(u); u <- u + H(f - A u), from u = 0, until the relative
/// residual drops below tol.
SolveReport hybrid_solve(const Stencil9Field& a, const Field& f, const SmootherSpec& smoother,
                         const SpectralCorrector& hc, const SolveOptions& opts = {});

double contraction_from_history(const std::vector<double>& history, int window = 5);

using ItemFactory = std::function<TrainItem(const Grid&, int mu_id)>;
using CorrectorFactory = std::function<SpectralCorrector(const TrainItem&)>;

struct SweepRow {
  int scale = 0;
  int mu_id = 0;
  int iterations = 0;
  double contraction = 0.0;
  bool converged = false;
};

struct SweepSummary {
  int scale = 0;
  double mean = 0.0;
  double std = 0.0;
};

/// Solves `samples` problems per scale on dim-dimensional grids; the item's
/// b is the right-hand side.
std::vector<SweepRow> sweep_scales(const ItemFactory& items, const CorrectorFactory& correctors,
                                   const SmootherSpec& smoother, const std::vector<int>& scales,
                                   int samples, const SolveOptions& opts = {}, int dim = 2);
std::vector<SweepSummary> summarize_sweep(const std::vector<SweepRow>& rows);

struct RhsStudyRow {
  RhsKind kind = RhsKind::f1;
  int iterations = 0;
  double contraction = 0.0;
  bool converged = false;
};

struct RhsStudy {
  std::vector<RhsStudyRow> rows;
  /// max / min contraction - 1
  double spread = 0.0;
};

/// Right-hand sides are rhs_scale * f_kind. Iterations count steps to
/// opts.tol; the contraction is the last-five estimate of the same error
/// recurrence continued (by restarts) to a 1e-30 reduction or opts.maxit
/// steps, so it measures the asymptotic rate rather than the transient.
RhsStudy rhs_independence_study(const Stencil9Field& a, const SpectralCorrector& hc,
                                const SmootherSpec& smoother, const std::vector<RhsKind>& kinds,
                                double rhs_scale, std::uint64_t seed, const SolveOptions& opts);

}  // namespace fns
