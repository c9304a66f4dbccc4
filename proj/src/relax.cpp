#include "fns/relax.hpp"

#include <string>

#include "fns/errors.hpp"

namespace fns {

void SmootherSpec::validate() const {
  if (!(omega > 0.0 && omega < 2.0))
    throw ValidationError("smoother weight must lie in (0, 2), got " + std::to_string(omega));
  if (sweeps < 0) throw ValidationError("smoother sweeps must be non-negative");
}

std::vector<cplx> smoother_weights(const SmootherSpec& spec, const Stencil9Field& a) {
  std::vector<cplx> w(a.coeffs.size(), spec.omega);
  if (spec.kind == SmootherKind::richardson) return w;
  for (std::size_t p = 0; p < w.size(); ++p) {
    const cplx d = a.coeffs[p][C];
    if (d == 0.0) throw ZeroDiagonal("zero diagonal at node " + std::to_string(p));
    w[p] = spec.omega / d;
  }
  return w;
}

Field smooth(const SmootherSpec& spec, const Stencil9Field& a, const Field& u, const Field& f) {
  require_same_grid(a.grid, u.grid, "smooth");
  require_same_grid(a.grid, f.grid, "smooth");
  const auto w = smoother_weights(spec, a);
  Field cur = u;
  for (int m = 0; m < spec.sweeps; ++m) {
    const Field au = apply_stencil(a, cur);
    for (std::size_t p = 0; p < cur.size(); ++p) cur.values[p] += w[p] * (f.values[p] - au.values[p]);
  }
  return cur;
}

Field error_propagation_apply(const SmootherSpec& spec, const Stencil9Field& a, const Field& e) {
  require_same_grid(a.grid, e.grid, "error_propagation_apply");
  const auto w = smoother_weights(spec, a);
  Field cur = e;
  for (int m = 0; m < spec.sweeps; ++m) {
    const Field ae = apply_stencil(a, cur);
    for (std::size_t p = 0; p < cur.size(); ++p) cur.values[p] -= w[p] * ae.values[p];
  }
  return cur;
}

Field error_propagation_adjoint(const SmootherSpec& spec, const Stencil9Field& a, const Field& v) {
  require_same_grid(a.grid, v.grid, "error_propagation_adjoint");
  const auto w = smoother_weights(spec, a);
  Field cur = v;
  Field tmp(v.grid);
  for (int m = 0; m < spec.sweeps; ++m) {
    for (std::size_t p = 0; p < cur.size(); ++p) tmp.values[p] = std::conj(w[p]) * cur.values[p];
    const Field at = apply_stencil_adjoint(a, tmp);
    for (std::size_t p = 0; p < cur.size(); ++p) cur.values[p] -= at.values[p];
  }
  return cur;
}

}  // namespace fns
