#include "fns/corrector.hpp"

#include <cmath>

#include "fns/errors.hpp"
#include "fns/rng.hpp"

namespace fns {

Kernel::Kernel(int size_, int dim_) : size(size_), dim(dim_) {
  if (size < 1 || size % 2 == 0) throw ValidationError("kernel size must be odd and positive");
  taps.assign(dim == 2 ? static_cast<std::size_t>(size) * size : static_cast<std::size_t>(size), 0.0);
}

Kernel Kernel::identity(int size, int dim) {
  Kernel k(size, dim);
  k.tap(0, 0) = 1.0;
  return k;
}

namespace {

int wrap(int v, int n) {
  v %= n;
  return v < 0 ? v + n : v;
}

template <bool Correlate>
ExtendedField kernel_pass(const Kernel& k, const ExtendedField& x) {
  const Grid& g = x.grid;
  const int ex = g.ex();
  const int ey = g.ey();
  const int r = k.radius();
  const int r2 = g.dim == 2 ? r : 0;
  ExtendedField y(g);
  for (int q2 = -r2; q2 <= r2; ++q2) {
    for (int q1 = -r; q1 <= r; ++q1) {
      const cplx t = Correlate ? std::conj(k.tap(q1, q2)) : k.tap(q1, q2);
      if (t == 0.0) continue;
      const int s1 = Correlate ? q1 : -q1;
      const int s2 = Correlate ? q2 : -q2;
      for (int m2 = 0; m2 < ey; ++m2) {
        const cplx* src = x.values.data() + static_cast<std::size_t>(wrap(m2 + s2, ey)) * ex;
        cplx* dst = y.values.data() + static_cast<std::size_t>(m2) * ex;
        const int shift = wrap(s1, ex);
        const int split = ex - shift;
        for (int m1 = 0; m1 < split; ++m1) dst[m1] += t * src[m1 + shift];
        for (int m1 = split; m1 < ex; ++m1) dst[m1] += t * src[m1 + shift - ex];
      }
    }
  }
  return y;
}

// kernel gradient for y = convolve(k, x): kbar[q] = sum_m ybar[m] conj(x[m - q])
// for y = correlate_conj(k, x):           kbar[q] = sum_m conj(ybar[m]) x[m + q]
template <bool Correlate>
void kernel_grad(const Kernel& k, const ExtendedField& x, const ExtendedField& ybar,
                 std::vector<cplx>& kbar) {
  const Grid& g = x.grid;
  const int ex = g.ex();
  const int ey = g.ey();
  const int r = k.radius();
  const int r2 = g.dim == 2 ? r : 0;
  for (int q2 = -r2; q2 <= r2; ++q2) {
    for (int q1 = -r; q1 <= r; ++q1) {
      const int s1 = Correlate ? q1 : -q1;
      const int s2 = Correlate ? q2 : -q2;
      cplx acc = 0.0;
      for (int m2 = 0; m2 < ey; ++m2) {
        const cplx* xs = x.values.data() + static_cast<std::size_t>(wrap(m2 + s2, ey)) * ex;
        const cplx* ys = ybar.values.data() + static_cast<std::size_t>(m2) * ex;
        for (int m1 = 0; m1 < ex; ++m1) {
          const cplx xv = xs[wrap(m1 + s1, ex)];
          acc += Correlate ? std::conj(ys[m1]) * xv : ys[m1] * std::conj(xv);
        }
      }
      kbar[k.index(q1, q2)] += acc;
    }
  }
}

void mask_field(Field& f, const RegionMask& mask, int label) {
  for (std::size_t p = 0; p < f.size(); ++p)
    if (mask.labels[p] != label) f.values[p] = 0.0;
}

// Shared body of forward and adjoint: for the adjoint pass the lattice
// multiplier is conjugated and extension/restriction swap roles.
ExtendedField spectral_core(const SpectralCorrector& hc, ExtendedField x, bool conj_lambda,
                            CorrectorActivation* act) {
  fft2_inplace(x, Direction::inverse);
  if (act) act->after_inverse_fft = x;
  for (auto it = hc.kernels.rbegin(); it != hc.kernels.rend(); ++it) {
    if (act) act->correlate_inputs.push_back(x);
    x = correlate_conj(*it, x);
  }
  if (act) act->after_cstar = x;
  for (std::size_t p = 0; p < x.values.size(); ++p)
    x.values[p] *= conj_lambda ? std::conj(hc.lambda[p]) : hc.lambda[p];
  if (act) act->after_lambda = x;
  for (const auto& k : hc.kernels) {
    if (act) act->convolve_inputs.push_back(x);
    x = convolve(k, x);
  }
  if (act) act->after_c = x;
  fft2_inplace(x, Direction::forward);
  return x;
}

void check_lambda(const SpectralCorrector& hc) {
  if (hc.lambda.size() != hc.grid.extended_size())
    throw ShapeMismatch("corrector lambda does not cover the extended lattice");
}

}  // namespace

ExtendedField convolve(const Kernel& k, const ExtendedField& x) { return kernel_pass<false>(k, x); }
ExtendedField correlate_conj(const Kernel& k, const ExtendedField& x) {
  return kernel_pass<true>(k, x);
}

SpectralCorrector SpectralCorrector::diagonal(const Grid& g) {
  SpectralCorrector hc;
  hc.grid = g;
  hc.variant = CorrectorVariant::diagonal;
  hc.lambda.assign(g.extended_size(), 0.0);
  return hc;
}

SpectralCorrector SpectralCorrector::conv(const Grid& g, int kernel_size, int depth) {
  SpectralCorrector hc = diagonal(g);
  hc.variant = CorrectorVariant::conv;
  for (int d = 0; d < depth; ++d) hc.kernels.push_back(Kernel::identity(kernel_size, g.dim));
  return hc;
}

SpectralCorrector SpectralCorrector::region_split(const RegionMask& mask, SpectralCorrector part1,
                                                  SpectralCorrector part2) {
  require_same_grid(mask.grid, part1.grid, "region_split");
  require_same_grid(mask.grid, part2.grid, "region_split");
  SpectralCorrector hc;
  hc.grid = mask.grid;
  hc.variant = CorrectorVariant::region_split;
  hc.mask = mask;
  hc.parts.push_back(std::move(part1));
  hc.parts.push_back(std::move(part2));
  return hc;
}

Field apply_corrector(const SpectralCorrector& hc, const Field& r) {
  return apply_corrector(hc, r, nullptr);
}

Field apply_corrector(const SpectralCorrector& hc, const Field& r, CorrectorActivation* act) {
  require_same_grid(hc.grid, r.grid, "apply_corrector");
  if (hc.variant == CorrectorVariant::region_split) {
    Field out(hc.grid);
    for (int part = 0; part < 2; ++part) {
      Field in = r;
      if (hc.mask_input) mask_field(in, hc.mask, part + 1);
      Field y = apply_corrector(hc.parts[part], in, nullptr);
      mask_field(y, hc.mask, part + 1);
      for (std::size_t p = 0; p < out.size(); ++p) out.values[p] += y.values[p];
    }
    return out;
  }
  check_lambda(hc);
  Field out = restrict(spectral_core(hc, odd_extend(r), false, act));
  if (hc.scale != 1.0)
    for (auto& z : out.values) z *= hc.scale;
  return out;
}

Field adjoint_apply(const SpectralCorrector& hc, const Field& g) {
  require_same_grid(hc.grid, g.grid, "adjoint_apply");
  if (hc.variant == CorrectorVariant::region_split) {
    Field out(hc.grid);
    for (int part = 0; part < 2; ++part) {
      Field in = g;
      mask_field(in, hc.mask, part + 1);
      Field y = adjoint_apply(hc.parts[part], in);
      if (hc.mask_input) mask_field(y, hc.mask, part + 1);
      for (std::size_t p = 0; p < out.size(); ++p) out.values[p] += y.values[p];
    }
    return out;
  }
  check_lambda(hc);
  Field out = odd_extend_adjoint(spectral_core(hc, restrict_adjoint(g), true, nullptr));
  if (hc.scale != 1.0)
    for (auto& z : out.values) z *= hc.scale;
  return out;
}

CorrectorGrad CorrectorGrad::zeros_like(const SpectralCorrector& hc) {
  CorrectorGrad g;
  if (hc.variant == CorrectorVariant::region_split) {
    for (const auto& p : hc.parts) g.parts.push_back(zeros_like(p));
    return g;
  }
  g.lambda.assign(hc.lambda.size(), 0.0);
  for (const auto& k : hc.kernels) g.kernels.emplace_back(k.taps.size(), 0.0);
  return g;
}

void CorrectorGrad::add(const CorrectorGrad& o) {
  for (std::size_t p = 0; p < lambda.size(); ++p) lambda[p] += o.lambda[p];
  for (std::size_t d = 0; d < kernels.size(); ++d)
    for (std::size_t q = 0; q < kernels[d].size(); ++q) kernels[d][q] += o.kernels[d][q];
  for (std::size_t p = 0; p < parts.size(); ++p) parts[p].add(o.parts[p]);
}

Field corrector_backward(const SpectralCorrector& hc, const Field& r, const Field& out_bar,
                         CorrectorGrad& grad) {
  require_same_grid(hc.grid, r.grid, "corrector_backward");
  require_same_grid(hc.grid, out_bar.grid, "corrector_backward");
  if (hc.variant == CorrectorVariant::region_split) {
    Field r_bar(hc.grid);
    for (int part = 0; part < 2; ++part) {
      Field in = r;
      if (hc.mask_input) mask_field(in, hc.mask, part + 1);
      Field y_bar = out_bar;
      mask_field(y_bar, hc.mask, part + 1);
      Field in_bar = corrector_backward(hc.parts[part], in, y_bar, grad.parts[part]);
      if (hc.mask_input) mask_field(in_bar, hc.mask, part + 1);
      for (std::size_t p = 0; p < r_bar.size(); ++p) r_bar.values[p] += in_bar.values[p];
    }
    return r_bar;
  }
  check_lambda(hc);
  CorrectorActivation act;
  apply_corrector(hc, r, &act);

  // back through scale * restrict * F
  ExtendedField x = restrict_adjoint(out_bar);
  if (hc.scale != 1.0)
    for (auto& z : x.values) z *= hc.scale;
  fft2_inplace(x, Direction::inverse);
  // back through C (forward order stages, reversed here)
  for (std::size_t d = hc.kernels.size(); d-- > 0;) {
    kernel_grad<false>(hc.kernels[d], act.convolve_inputs[d], x, grad.kernels[d]);
    x = correlate_conj(hc.kernels[d], x);
  }
  for (std::size_t p = 0; p < x.values.size(); ++p) {
    grad.lambda[p] += std::conj(act.after_cstar.values[p]) * x.values[p];
    x.values[p] *= std::conj(hc.lambda[p]);
  }
  // back through C*: stage s used kernel (depth-1-s)
  const std::size_t depth = hc.kernels.size();
  for (std::size_t s = depth; s-- > 0;) {
    const std::size_t d = depth - 1 - s;
    kernel_grad<true>(hc.kernels[d], act.correlate_inputs[s], x, grad.kernels[d]);
    x = convolve(hc.kernels[d], x);
  }
  fft2_inplace(x, Direction::forward);
  return odd_extend_adjoint(x);
}

Field corrector_column(const SpectralCorrector& hc, int m1, int m2) {
  const Grid& g = hc.grid;
  if (m1 < 0 || m1 >= g.ex() || m2 < 0 || m2 >= g.ey())
    throw IndexOutOfRange("frequency bin outside the extended lattice");
  const SpectralCorrector* base = &hc;
  if (hc.variant == CorrectorVariant::region_split) base = &hc.parts.front();
  ExtendedField x(g);
  x(m1, m2) = 1.0;
  // the untransformed column fixes the normalisation, so C = I gives a unit mode
  ExtendedField ref = fft2(x, Direction::forward);
  const double nrm = norm2(odd_extend_adjoint(ref));
  for (const auto& k : base->kernels) x = convolve(k, x);
  fft2_inplace(x, Direction::forward);
  Field psi = odd_extend_adjoint(x);
  for (auto& z : psi.values) z = nrm > 1e-12 ? z / nrm : cplx(0.0);
  return psi;
}

std::vector<Field> corrector_columns(const SpectralCorrector& hc,
                                     const std::vector<std::pair<int, int>>& bins) {
  std::vector<Field> out;
  out.reserve(bins.size());
  for (const auto& [m1, m2] : bins) out.push_back(corrector_column(hc, m1, m2));
  return out;
}

SpectralCorrector reciprocal_symbol_corrector(const Stencil9Field& s) {
  const SymbolMap sym = stencil_symbol(s);
  SpectralCorrector hc = SpectralCorrector::diagonal(s.grid);
  for (std::size_t p = 0; p < hc.lambda.size(); ++p)
    hc.lambda[p] = std::abs(sym.values[p]) > 1e-300 ? 1.0 / sym.values[p] : cplx(0.0);
  return hc;
}

double mean_abs_diagonal(const Stencil9Field& s, const RegionMask* mask, int label) {
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t p = 0; p < s.coeffs.size(); ++p) {
    if (mask && label != 0 && mask->labels[p] != label) continue;
    acc += std::abs(s.coeffs[p][C]);
    ++count;
  }
  return count ? acc / count : 1.0;
}

double kernel_unitarity_defect(const SpectralCorrector& hc, std::uint64_t seed) {
  const SpectralCorrector* base = &hc;
  if (hc.variant == CorrectorVariant::region_split) base = &hc.parts.front();
  if (base->kernels.empty()) return 0.0;
  CounterRng rng(seed, 0x757);
  ExtendedField x(base->grid);
  for (std::size_t p = 0; p < x.values.size(); ++p) x.values[p] = {rng.normal(2 * p), rng.normal(2 * p + 1)};
  ExtendedField y = x;
  for (const auto& k : base->kernels) y = convolve(k, y);
  for (auto it = base->kernels.rbegin(); it != base->kernels.rend(); ++it) y = correlate_conj(*it, y);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t p = 0; p < x.values.size(); ++p) {
    num += std::norm(y.values[p] - x.values[p]);
    den += std::norm(x.values[p]);
  }
  return std::sqrt(num / den);
}

}  // namespace fns
