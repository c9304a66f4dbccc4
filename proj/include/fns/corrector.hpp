#pragma once

#include <vector>

#include "fns/lfa.hpp"

namespace fns {

/// Small centred complex kernel acting periodically on the frequency
/// lattice; size x size taps (size taps in 1D), size odd.
struct Kernel {
  int size = 5;
  int dim = 2;
  std::vector<cplx> taps;

  Kernel() = default;
  Kernel(int size, int dim);
  static Kernel identity(int size, int dim);
  int radius() const { return size / 2; }
  cplx& tap(int q1, int q2 = 0) { return taps[index(q1, q2)]; }
  const cplx& tap(int q1, int q2 = 0) const { return taps[index(q1, q2)]; }
  std::size_t index(int q1, int q2) const {
    const int r = radius();
    return static_cast<std::size_t>(dim == 2 ? q2 + r : 0) * size + (q1 + r);
  }
};

/// y[m] = sum_q k[q] x[m - q] (periodic).
ExtendedField convolve(const Kernel& k, const ExtendedField& x);
/// y[m] = sum_q conj(k[q]) x[m + q]; the adjoint of convolve.
ExtendedField correlate_conj(const Kernel& k, const ExtendedField& x);

enum class CorrectorVariant { diagonal, conv, region_split };

/// H(r) = scale * restrict(F C diag(lambda) C* F^-1 odd_extend(r)).
/// Region split: H(r) = sum_r P_r H_r(P_r r) with P_r the node mask of
/// region r (input masking switchable).
struct SpectralCorrector {
  Grid grid;
  CorrectorVariant variant = CorrectorVariant::diagonal;
  std::vector<cplx> lambda;
  std::vector<Kernel> kernels;
  double scale = 1.0;

  std::vector<SpectralCorrector> parts;
  RegionMask mask;
  bool mask_input = true;

  static SpectralCorrector diagonal(const Grid& g);
  static SpectralCorrector conv(const Grid& g, int kernel_size = 5, int depth = 1);
  static SpectralCorrector region_split(const RegionMask& mask, SpectralCorrector part1,
                                        SpectralCorrector part2);

  cplx& lam(int m1, int m2 = 0) { return lambda[grid.extended_index(m1, m2)]; }
  const cplx& lam(int m1, int m2 = 0) const { return lambda[grid.extended_index(m1, m2)]; }
};

/// Frequency-domain intermediates of one (non-split) application.
struct CorrectorActivation {
  ExtendedField after_inverse_fft;
  std::vector<ExtendedField> correlate_inputs;  // input of each C* stage, in application order
  ExtendedField after_cstar;
  ExtendedField after_lambda;
  std::vector<ExtendedField> convolve_inputs;   // input of each C stage, in application order
  ExtendedField after_c;
};

Field apply_corrector(const SpectralCorrector& hc, const Field& r);
Field apply_corrector(const SpectralCorrector& hc, const Field& r, CorrectorActivation* act);
Field adjoint_apply(const SpectralCorrector& hc, const Field& g);

/// Gradient of a real functional with respect to the corrector parameters
/// (complex entries hold d/dRe + i d/dIm).
struct CorrectorGrad {
  std::vector<cplx> lambda;
  std::vector<std::vector<cplx>> kernels;
  std::vector<CorrectorGrad> parts;

  static CorrectorGrad zeros_like(const SpectralCorrector& hc);
  void add(const CorrectorGrad& o);
};

/// Given the input r and the output cotangent, accumulate parameter
/// gradients into grad and return the input cotangent.
Field corrector_backward(const SpectralCorrector& hc, const Field& r, const Field& out_bar,
                         CorrectorGrad& grad);

/// psi_i = F C e_i for lattice bins (m1, m2), projected onto the odd
/// (sine) subspace and scaled so that C = I yields a unit sine mode; zero for wall bins.
Field corrector_column(const SpectralCorrector& hc, int m1, int m2 = 0);
std::vector<Field> corrector_columns(const SpectralCorrector& hc,
                                     const std::vector<std::pair<int, int>>& bins);

/// Exact periodic solver for a constant stencil: lambda = 1 / symbol
/// (zero where the symbol vanishes).
SpectralCorrector reciprocal_symbol_corrector(const Stencil9Field& s);

/// Mean |diagonal| over the nodes selected by mask label (0 = all nodes).
double mean_abs_diagonal(const Stencil9Field& s, const RegionMask* mask = nullptr, int label = 0);

/// Diagnostic || C* C - I || on a random probe (0 for the diagonal variant).
double kernel_unitarity_defect(const SpectralCorrector& hc, std::uint64_t seed = 1);

}  // namespace fns
