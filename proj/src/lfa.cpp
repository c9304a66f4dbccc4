#include "fns/lfa.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "fns/errors.hpp"

namespace fns {

std::size_t FrequencyMask::count(FreqLabel l) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), l));
}

cplx coeff_symbol(const Coeffs9& c, double t1, double t2) {
  cplx acc = 0.0;
  for (int k = 0; k < 9; ++k) {
    if (c[k] == 0.0) continue;
    acc += c[k] * std::polar(1.0, t1 * kDx[k] + t2 * kDy[k]);
  }
  return acc;
}

namespace {

void require_constant(const Stencil9Field& s) {
  if (!s.is_constant()) throw NotConstantStencil("symbol needs a spatially constant stencil");
}

cplx smoother_value(const SmootherSpec& spec, const Coeffs9& c, double t1, double t2) {
  const cplx a = coeff_symbol(c, t1, t2);
  cplx base;
  if (spec.kind == SmootherKind::jacobi) {
    if (c[C] == 0.0) throw ZeroDiagonal("zero stencil centre");
    base = 1.0 - spec.omega * a / c[C];
  } else {
    base = 1.0 - spec.omega * a;
  }
  cplx out = 1.0;
  for (int m = 0; m < spec.sweeps; ++m) out *= base;
  return out;
}

template <class Fn>
SymbolMap fill(const Grid& g, Fn&& fn) {
  SymbolMap out(g);
  for (int m2 = 0; m2 < g.ey(); ++m2)
    for (int m1 = 0; m1 < g.ex(); ++m1) out(m1, m2) = fn(out.theta1(m1), out.theta2(m2));
  return out;
}

}  // namespace

SymbolMap stencil_symbol(const Stencil9Field& s) {
  require_constant(s);
  const Coeffs9& c = s.coeffs.front();
  return fill(s.grid, [&](double t1, double t2) { return coeff_symbol(c, t1, t2); });
}

SymbolMap jacobi_symbol(const SmootherSpec& spec, const Stencil9Field& s) {
  require_constant(s);
  const Coeffs9& c = s.coeffs.front();
  return fill(s.grid, [&](double t1, double t2) { return smoother_value(spec, c, t1, t2); });
}

SymbolMap sampled_symbol(const SmootherSpec& spec, const Stencil9Field& s, int sample_stride) {
  if (sample_stride < 1) throw ValidationError("sample stride must be positive");
  const Grid& g = s.grid;
  auto positions = [&](int len) {
    std::vector<int> pos;
    for (int i = ((len - 1) / 2) % sample_stride; i < len; i += sample_stride) pos.push_back(i);
    return pos;
  };
  // distinct frozen stencils only
  std::vector<Coeffs9> frozen;
  auto less = [](const Coeffs9& a, const Coeffs9& b) {
    for (int k = 0; k < 9; ++k) {
      if (a[k].real() != b[k].real()) return a[k].real() < b[k].real();
      if (a[k].imag() != b[k].imag()) return a[k].imag() < b[k].imag();
    }
    return false;
  };
  std::map<Coeffs9, int, decltype(less)> seen(less);
  for (int j : positions(g.ny()))
    for (int i : positions(g.nx())) {
      const Coeffs9& c = s.at(i, j);
      if (c[C] == 0.0) throw ZeroDiagonal("zero diagonal at sampled node");
      if (seen.emplace(c, 0).second) frozen.push_back(c);
    }
  return fill(g, [&](double t1, double t2) {
    cplx best = 0.0;
    double best_mod = -1.0;
    for (const auto& c : frozen) {
      const cplx v = smoother_value(spec, c, t1, t2);
      if (std::abs(v) > best_mod) {
        best_mod = std::abs(v);
        best = v;
      }
    }
    return best;
  });
}

FrequencyMask partition_frequencies(const SymbolMap& symbol, PartitionMode mode, double param) {
  const Grid& g = symbol.grid;
  FrequencyMask mask{g, std::vector<FreqLabel>(g.extended_size(), FreqLabel::B), 0.0, 0.0};
  const double half = param > 0.0 ? param : std::numbers::pi / 2.0;
  double max_h = 0.0;
  bool any_b = false;
  bool any_h = false;
  for (int m2 = 0; m2 < g.ey(); ++m2) {
    for (int m1 = 0; m1 < g.ex(); ++m1) {
      const double mod = std::abs(symbol(m1, m2));
      bool is_h;
      if (mode == PartitionMode::box) {
        const double t1 = symbol.theta1(m1);
        const double t2 = symbol.theta2(m2);
        is_h = t1 >= -half && t1 < half && (g.dim == 1 || (t2 >= -half && t2 < half));
      } else {
        is_h = mod > param;
      }
      if (is_h) {
        mask.labels[g.extended_index(m1, m2)] = FreqLabel::H;
        max_h = std::max(max_h, mod);
        any_h = true;
      } else {
        mask.mu_b = std::max(mask.mu_b, mod);
        any_b = true;
      }
    }
  }
  mask.eps_b = std::max(0.0, max_h - 1.0);
  if (!any_h) throw EmptyPartition("frequency partition has no H frequencies", mask.mu_b, mask.eps_b);
  if (!any_b) throw EmptyPartition("frequency partition has no B frequencies", mask.mu_b, mask.eps_b);
  return mask;
}

int h_region_components(const FrequencyMask& mask) {
  const Grid& g = mask.grid;
  const int ex = g.ex();
  const int ey = g.ey();
  std::vector<int> comp(g.extended_size(), -1);
  int count = 0;
  std::vector<std::pair<int, int>> stack;
  for (int s2 = 0; s2 < ey; ++s2)
    for (int s1 = 0; s1 < ex; ++s1) {
      const auto start = g.extended_index(s1, s2);
      if (mask.labels[start] != FreqLabel::H || comp[start] >= 0) continue;
      comp[start] = count;
      stack.push_back({s1, s2});
      while (!stack.empty()) {
        const auto [a, b] = stack.back();
        stack.pop_back();
        const int nb[4][2] = {{(a + 1) % ex, b}, {(a + ex - 1) % ex, b}, {a, (b + 1) % ey}, {a, (b + ey - 1) % ey}};
        for (const auto& q : nb) {
          const auto idx = g.extended_index(q[0], q[1]);
          if (mask.labels[idx] == FreqLabel::H && comp[idx] < 0) {
            comp[idx] = count;
            stack.push_back({q[0], q[1]});
          }
        }
      }
      ++count;
    }
  return count;
}

}  // namespace fns
