#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fns/hybrid.hpp"
#include "fns/lfa.hpp"

namespace fns {

enum class PdeKind { random_diffusion, anisotropic, convection_diffusion, jumping, poisson1d };
PdeKind parse_pde(const std::string& s);
std::string to_string(PdeKind k);
CorrectorVariant parse_variant(const std::string& s);
std::string to_string(CorrectorVariant v);

/// One fixed problem instance (lfa, verify, solve, flow).
struct ProblemParams {
  double xi = 1.0;
  double theta = 0.0;
  double eps = 1.0;
  double wx = 0.0;
  double wy = 0.0;
  int blocks = 4;
  double m = 8.0;
  std::uint64_t coef_seed = 1;
};

/// Sampling ranges for dataset generation; the anisotropic and convection
/// ranges are fixed by the recipes.
struct DatasetSection {
  int count = 40;
  std::uint64_t seed = 1;
  double m_min = 4.0;
  double m_max = 8.0;
};

struct SolveSection {
  SolveOptions opts;
  /// "random" (standard normal from rhs_seed) or f1..f4.
  std::string rhs = "random";
  std::uint64_t rhs_seed = 1;
  std::vector<int> scales;
  int samples = 10;
  /// Dataset seed of the held-out problems used by sweep.
  std::uint64_t test_seed = 900;
};

struct ExperimentConfig {
  PdeKind pde = PdeKind::random_diffusion;
  int n = 31;
  ProblemParams problem;
  SmootherSpec smoother{SmootherKind::jacobi, 0.75, 10};
  ModelSpec model;
  PartitionMode partition = PartitionMode::box;
  /// Box half-width (<= 0 means pi/2) or threshold level.
  double partition_param = 0.0;
  DatasetSection dataset;
  /// M and omega are copied from the smoother section.
  TrainConfig train;
  SolveSection solve;
  std::string out = "out";

  Grid grid() const { return grid_for(n); }
  Grid grid_for(int size) const { return Grid(size, pde == PdeKind::poisson1d ? 1 : 2); }
  /// Throws ValidationError on the first violated precondition.
  void validate() const;
};

/// Sectioned key = value text ([problem], [smoother], [corrector],
/// [partition], [dataset], [train], [solve], [output]); '#' and ';' start
/// comments. Unknown sections or keys are rejected.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

/// Sets one "section.key" entry from text, with the same parsing and
/// checks as the file reader.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

double parse_real(const std::string& s, const std::string& what);
long long parse_integer(const std::string& s, const std::string& what);
std::uint64_t parse_seed(const std::string& s, const std::string& what);
std::vector<int> parse_int_list(const std::string& s, const std::string& what);

}  // namespace fns
