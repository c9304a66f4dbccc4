#pragma once

#include <string>
#include <vector>

#include "fns/dense.hpp"
#include "fns/hybrid.hpp"

namespace fns {

struct EigenSystem {
  Grid grid;
  std::vector<cplx> values;  // sorted by modulus
  DenseMatrix vectors;       // unit columns
  double condition = 0.0;    // 1-norm condition of the eigenvector matrix
  double max_residual = 0.0; // max ||A xi - lambda xi|| / ||A||_1
};

/// Dense spectrum of a stencil operator; n^dim must not exceed 961.
EigenSystem dense_eig(const Stencil9Field& s);

struct Expansion {
  std::vector<cplx> t;
  std::vector<int> support;
};

/// Unit-norm odd (sine) Fourier mode phi(theta) of lattice bin (m1, m2).
Field fourier_mode(const Grid& g, int m1, int m2 = 0);

/// Solves Q t = phi via a prepared LU of the eigenvector matrix; support
/// holds indices with |t_i| > tau max |t|.
Expansion expansion_coefficients(const EigenSystem& eig, const LuFactor& q_lu, const Field& phi,
                                 double tau = 1e-6);
Expansion expansion_coefficients(const EigenSystem& eig, int m1, int m2 = 0, double tau = 1e-6);

/// ||xi_i - H(lambda_i xi_i)|| for every eigenpair.
std::vector<double> corrector_eigen_errors(const SpectralCorrector& hc, const EigenSystem& eig);

struct ThetaRow {
  int m1 = 0;
  int m2 = 0;
  FreqLabel label = FreqLabel::B;
  int support = 0;
  double l_sum = 0.0;
  int matched = -1;
};

struct AssumptionReport {
  int M = 0;
  double mu_b = 0.0;
  double eps_b = 0.0;
  double mu_h = 0.0;
  double c_bound = 0.0;
  double eps_v = 0.0;
  double eps_lambda = 0.0;    // max over matched H indices of |lambda~ lambda - 1|
  double eps_lambda_b = 0.0;  // max over matched B indices of |lambda~|
  double eta = 0.0;
  double empirical = 0.0;     // geometric contraction over steps 5..20
  bool bound_honored = false;
  int max_support = 0;
  double eig_condition = 0.0;
  bool unreliable = false;
  double mean_l_h = 0.0;      // over eigen-indices matched to H frequencies
  double mean_l_b = 0.0;
  std::size_t union_h_size = 0;  // |union of V_theta over H|
  std::vector<ThetaRow> rows;
  std::vector<double> l_norms;
};

/// eta = sqrt(max{2 mu_B^{2M} C, 2 (1 + eps_B)^{2M} mu_H}).
double theorem_eta(double mu_b, double eps_b, int M, double c_bound, double mu_h);

struct AuditOptions {
  PartitionMode mode = PartitionMode::box;
  double param = 0.0;
  double tau = 1e-6;
  int sample_stride = 4;
  std::uint64_t seed = 7;
};

/// Empirical per-step contraction of e <- (I - H A)(I - B A)^M e, measured
/// as the geometric mean over steps first..last of a normalised power run.
double empirical_contraction(const Stencil9Field& a, const SmootherSpec& smoother,
                             const SpectralCorrector& hc, int first = 5, int last = 20,
                             std::uint64_t seed = 7);

AssumptionReport audit(const Stencil9Field& a, const SmootherSpec& smoother,
                       const SpectralCorrector& hc, const AuditOptions& opts = {});

std::string format_report(const AssumptionReport& r);

}  // namespace fns
