#pragma once

#include "fns/pde_zoo.hpp"

namespace fns {

enum class SmootherKind { jacobi, richardson };

struct SmootherSpec {
  SmootherKind kind = SmootherKind::jacobi;
  double omega = 0.75;
  int sweeps = 1;

  void validate() const;
};

/// M sweeps of u <- u + omega D^-1 (f - A u) (Jacobi) or u + omega (f - A u).
Field smooth(const SmootherSpec& spec, const Stencil9Field& a, const Field& u, const Field& f);

/// (I - omega D^-1 A)^M e.
Field error_propagation_apply(const SmootherSpec& spec, const Stencil9Field& a, const Field& e);
/// Adjoint of error_propagation_apply: ((I - omega D^-1 A)^H)^M v.
Field error_propagation_adjoint(const SmootherSpec& spec, const Stencil9Field& a, const Field& v);

/// Per-node multiplier omega / d (Jacobi) or omega (Richardson).
std::vector<cplx> smoother_weights(const SmootherSpec& spec, const Stencil9Field& a);

}  // namespace fns
