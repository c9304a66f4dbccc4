#include "fns/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "fns/errors.hpp"

namespace fns {

EigenSystem dense_eig(const Stencil9Field& s) {
  if (s.grid.size() > 961) throw DomainError("dense_eig is limited to at most 961 unknowns");
  const DenseMatrix a = dense_matrix(s);
  DenseEigen de = eig_general(a);
  const int n = a.n;
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return std::abs(de.values[x]) < std::abs(de.values[y]); });
  EigenSystem es;
  es.grid = s.grid;
  es.values.resize(n);
  es.vectors = DenseMatrix(n);
  for (int k = 0; k < n; ++k) {
    es.values[k] = de.values[order[k]];
    for (int i = 0; i < n; ++i) es.vectors(i, k) = de.vectors(i, order[k]);
  }
  const double an = std::max(norm1(a), 1e-300);
  for (int k = 0; k < n; ++k) {
    const auto x = es.vectors.column(k);
    const auto ax = matvec(a, x);
    double r = 0.0;
    for (int i = 0; i < n; ++i) r += std::norm(ax[i] - es.values[k] * x[i]);
    es.max_residual = std::max(es.max_residual, std::sqrt(r) / an);
  }
  const LuFactor lu = lu_factor(es.vectors);
  es.condition = lu.singular ? std::numeric_limits<double>::infinity()
                             : norm1(es.vectors) * norm1(lu_inverse(lu));
  return es;
}

Field fourier_mode(const Grid& g, int m1, int m2) {
  Field phi = sample(g, [&](double x, double y) {
    const double sx = std::sin(std::numbers::pi * m1 * x);
    return g.dim == 2 ? sx * std::sin(std::numbers::pi * m2 * y) : sx;
  });
  const double nrm = norm2(phi);
  if (nrm > 1e-300)
    for (auto& z : phi.values) z /= nrm;
  return phi;
}

Expansion expansion_coefficients(const EigenSystem& eig, const LuFactor& q_lu, const Field& phi,
                                 double tau) {
  if (q_lu.singular) throw SingularEigenbasis("eigenvector matrix is singular");
  Expansion ex;
  ex.t = lu_solve(q_lu, phi.values);
  double tmax = 0.0;
  for (const auto& v : ex.t) tmax = std::max(tmax, std::abs(v));
  for (int i = 0; i < static_cast<int>(ex.t.size()); ++i)
    // tau <= 0 is the degenerate cutoff: every index counts, exact zeros included
    if (tau <= 0.0 || (tmax > 0.0 && std::abs(ex.t[i]) > tau * tmax)) ex.support.push_back(i);
  (void)eig;
  return ex;
}

Expansion expansion_coefficients(const EigenSystem& eig, int m1, int m2, double tau) {
  const LuFactor lu = lu_factor(eig.vectors);
  return expansion_coefficients(eig, lu, fourier_mode(eig.grid, m1, m2), tau);
}

std::vector<double> corrector_eigen_errors(const SpectralCorrector& hc, const EigenSystem& eig) {
  const int n = eig.vectors.n;
  std::vector<double> out(n);
  for (int k = 0; k < n; ++k) {
    Field xi(eig.grid, eig.vectors.column(k));
    const Field hx = apply_corrector(hc, eig.values[k] * xi);
    out[k] = norm2(xi - hx);
  }
  return out;
}

double theorem_eta(double mu_b, double eps_b, int M, double c_bound, double mu_h) {
  const double b_side = 2.0 * std::pow(mu_b, 2.0 * M) * c_bound;
  const double h_side = 2.0 * std::pow(1.0 + eps_b, 2.0 * M) * mu_h;
  return std::sqrt(std::max(b_side, h_side));
}

double empirical_contraction(const Stencil9Field& a, const SmootherSpec& smoother,
                             const SpectralCorrector& hc, int first, int last, std::uint64_t seed) {
  Field e = random_field(a.grid, seed, 0xe);
  e = (1.0 / norm2(e)) * e;
  double log_sum = 0.0;
  for (int k = 1; k <= last; ++k) {
    Field half = error_propagation_apply(smoother, a, e);
    Field next = half - apply_corrector(hc, apply_stencil(a, half));
    const double nrm = norm2(next);
    if (k > first) log_sum += std::log(std::max(nrm, 1e-300));
    if (nrm == 0.0) return 0.0;
    e = (1.0 / nrm) * next;
  }
  return std::exp(log_sum / (last - first));
}

AssumptionReport audit(const Stencil9Field& a, const SmootherSpec& smoother,
                       const SpectralCorrector& hc, const AuditOptions& opts) {
  const Grid& g = a.grid;
  AssumptionReport rep;
  rep.M = smoother.sweeps;

  SmootherSpec one = smoother;
  one.sweeps = 1;
  const SymbolMap sym = a.is_constant() ? jacobi_symbol(one, a) : sampled_symbol(one, a, opts.sample_stride);
  const FrequencyMask mask = partition_frequencies(sym, opts.mode, opts.param);
  rep.mu_b = mask.mu_b;
  rep.eps_b = mask.eps_b;

  const EigenSystem eig = dense_eig(a);
  rep.eig_condition = eig.condition;
  rep.unreliable = !(eig.condition <= 1e8);
  const LuFactor q_lu = lu_factor(eig.vectors);
  rep.l_norms = corrector_eigen_errors(hc, eig);
  const int n = static_cast<int>(g.size());

  // representative bins: one per sine mode
  std::vector<std::pair<int, int>> bins;
  for (int m2 = 1; m2 <= (g.dim == 2 ? g.n : 1); ++m2)
    for (int m1 = 1; m1 <= g.n; ++m1) bins.push_back({m1, g.dim == 2 ? m2 : 0});

  std::vector<char> in_union(n, 0);
  for (const auto& [m1, m2] : bins) {
    ThetaRow row;
    row.m1 = m1;
    row.m2 = m2;
    row.label = mask(m1, m2);
    const Expansion ex = expansion_coefficients(eig, q_lu, fourier_mode(g, m1, m2), opts.tau);
    row.support = static_cast<int>(ex.support.size());
    for (int i : ex.support) {
      row.l_sum += rep.l_norms[i] * rep.l_norms[i];
      if (row.label == FreqLabel::H) in_union[i] = 1;
    }
    rep.max_support = std::max(rep.max_support, row.support);
    if (row.label == FreqLabel::H)
      rep.mu_h = std::max(rep.mu_h, row.l_sum);
    else
      rep.c_bound = std::max(rep.c_bound, row.l_sum);
    rep.rows.push_back(row);
  }
  rep.union_h_size = static_cast<std::size_t>(std::count(in_union.begin(), in_union.end(), 1));

  // greedy matching of corrector columns to eigenvectors
  auto psi = corrector_columns(hc, bins);
  for (auto& f : psi) {
    const double nrm = norm2(f);
    if (nrm > 1e-300)
      for (auto& z : f.values) z /= nrm;
  }
  struct Pair {
    double overlap;
    int b, e;
  };
  std::vector<Pair> pairs;
  pairs.reserve(static_cast<std::size_t>(n) * n);
  for (int b = 0; b < n; ++b)
    for (int e = 0; e < n; ++e) {
      cplx d = 0.0;
      for (int i = 0; i < n; ++i) d += std::conj(psi[b].values[i]) * eig.vectors(i, e);
      pairs.push_back({std::abs(d), b, e});
    }
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) {
    if (x.overlap != y.overlap) return x.overlap > y.overlap;
    if (x.b != y.b) return x.b < y.b;
    return x.e < y.e;
  });
  std::vector<char> used_b(n, 0), used_e(n, 0);
  std::vector<double> overlap_of(n, 0.0);
  for (const auto& p : pairs) {
    if (used_b[p.b] || used_e[p.e]) continue;
    used_b[p.b] = used_e[p.e] = 1;
    rep.rows[p.b].matched = p.e;
    overlap_of[p.b] = p.overlap;
  }
  double sum_h = 0.0, sum_b = 0.0;
  int cnt_h = 0, cnt_b = 0;
  for (int b = 0; b < n; ++b) {
    const ThetaRow& row = rep.rows[b];
    const int e = row.matched;
    const cplx lt = dot(psi[b], apply_corrector(hc, psi[b]));
    if (row.label == FreqLabel::H) {
      rep.eps_v = std::max(rep.eps_v, 2.0 - 2.0 * overlap_of[b]);
      rep.eps_lambda = std::max(rep.eps_lambda, std::abs(lt * eig.values[e] - 1.0));
      sum_h += rep.l_norms[e];
      ++cnt_h;
    } else {
      rep.eps_lambda_b = std::max(rep.eps_lambda_b, std::abs(lt));
      sum_b += rep.l_norms[e];
      ++cnt_b;
    }
  }
  rep.mean_l_h = cnt_h ? sum_h / cnt_h : 0.0;
  rep.mean_l_b = cnt_b ? sum_b / cnt_b : 0.0;

  rep.eta = theorem_eta(rep.mu_b, rep.eps_b, rep.M, rep.c_bound, rep.mu_h);
  rep.empirical = empirical_contraction(a, smoother, hc, 5, 20, opts.seed);
  rep.bound_honored = rep.empirical <= rep.eta * (1.0 + 1e-6);
  return rep;
}

std::string format_report(const AssumptionReport& r) {
  std::ostringstream os;
  os.precision(6);
  os << "smoother: mu_B = " << r.mu_b << ", eps_B = " << r.eps_b << ", M = " << r.M << "\n";
  os << "corrector: mu_H = " << r.mu_h << ", C = " << r.c_bound << "\n";
  os << "columns: eps_v = " << r.eps_v << ", eps_lambda = " << r.eps_lambda
     << ", max|lambda~| on B = " << r.eps_lambda_b << "\n";
  os << "support: max |V_theta| = " << r.max_support << ", |I^H| = " << r.union_h_size << " of "
     << r.l_norms.size() << "\n";
  os << "mean ||l_i||: H = " << r.mean_l_h << ", B = " << r.mean_l_b << "\n";
  os << "eigenvector condition = " << r.eig_condition << (r.unreliable ? " (eta unreliable)" : "") << "\n";
  os << "eta = " << r.eta << "\n";
  os << "empirical contraction (steps 5-20) = " << r.empirical << "\n";
  os << "bound " << (r.bound_honored ? "honored" : "violated");
  if (!r.bound_honored && r.max_support > 4) os << " (sparsity breach: max |V_theta| = " << r.max_support << ")";
  os << "\n";
  return os.str();
}

}  // namespace fns
