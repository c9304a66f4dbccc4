#pragma once

#include <vector>

#include "fns/relax.hpp"

namespace fns {

/// Complex values on the extended frequency lattice; bin (m1, m2) sits at
/// theta = (lattice_theta(m1), lattice_theta(m2)).
struct SymbolMap {
  Grid grid;
  std::vector<cplx> values;

  SymbolMap() = default;
  explicit SymbolMap(const Grid& g) : grid(g), values(g.extended_size()) {}
  cplx& operator()(int m1, int m2 = 0) { return values[grid.extended_index(m1, m2)]; }
  const cplx& operator()(int m1, int m2 = 0) const { return values[grid.extended_index(m1, m2)]; }
  double theta1(int m1) const { return lattice_theta(m1, grid.ex()); }
  double theta2(int m2) const { return grid.dim == 2 ? lattice_theta(m2, grid.ey()) : 0.0; }
};

enum class FreqLabel : unsigned char { B, H };
enum class PartitionMode { box, threshold };

struct FrequencyMask {
  Grid grid;
  std::vector<FreqLabel> labels;
  double mu_b = 0.0;
  double eps_b = 0.0;

  FreqLabel operator()(int m1, int m2 = 0) const { return labels[grid.extended_index(m1, m2)]; }
  std::size_t count(FreqLabel l) const;
};

/// Symbol of a 9-point coefficient vector at a frequency.
cplx coeff_symbol(const Coeffs9& c, double t1, double t2);

SymbolMap stencil_symbol(const Stencil9Field& s);
/// (1 - omega A(theta) / c0)^M; Richardson drops the 1/c0.
SymbolMap jacobi_symbol(const SmootherSpec& spec, const Stencil9Field& s);
/// Worst case over frozen local stencils at nodes i = (n-1)/2 mod stride in
/// each dimension: per frequency, the sample with the largest modulus.
SymbolMap sampled_symbol(const SmootherSpec& spec, const Stencil9Field& s, int sample_stride = 4);

/// Box mode: H = [-param, param)^dim (param defaults to pi/2 when <= 0).
/// Threshold mode: H where |E(theta)| > param.
/// Throws EmptyPartition (carrying mu_B, eps_B) when a side is empty.
FrequencyMask partition_frequencies(const SymbolMap& symbol, PartitionMode mode, double param);

/// Number of 4-connected components of the H region on the periodic lattice.
int h_region_components(const FrequencyMask& mask);

}  // namespace fns
