#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fns/config.hpp"

namespace fns {

/// Parameters of one sampled problem; fields are realised from the seeds.
struct Recipe {
  int id = 0;
  PdeKind pde = PdeKind::random_diffusion;
  ProblemParams params;
  std::uint64_t rhs_seed = 0;
};

/// count recipes drawn from the pde's sampling law:
/// random diffusion: GRF coefficient seed;
/// anisotropic: xi ~ U[1e-6, 1], theta ~ U[-pi, pi];
/// convection: log10(1/eps) ~ U[0, 8], (wx, wy) ~ U[-1, 1]^2;
/// jumping: m ~ U[m_min, m_max] on the configured block count, coefficient
/// seeds whose checkerboard leaves a floating a = 1 island are skipped;
/// poisson1d: right-hand side seed only.
std::vector<Recipe> sample_recipes(const ExperimentConfig& cfg, int count, std::uint64_t seed);

/// The fixed instance described by cfg.problem (with the given rhs seed).
Recipe problem_recipe(const ExperimentConfig& cfg, std::uint64_t rhs_seed);

/// Operator, mask and meta input on grid g; b is the standard normal
/// field of rhs_seed.
TrainItem realize(const Recipe& r, const Grid& g, const SmootherSpec& smoother);
Stencil9Field realize_operator(const Recipe& r, const Grid& g, RegionMask* mask = nullptr);

/// One problem channel on the extended lattice: log a (random diffusion),
/// log10 a (jumping), the frozen Jacobi symbol modulus (anisotropic,
/// convection), zeros (poisson1d).
std::vector<double> meta_input(const Recipe& r, const Grid& g, const SmootherSpec& smoother);

std::vector<std::string> dataset_header();
void write_dataset(const std::string& path, const std::vector<Recipe>& recipes);
std::vector<Recipe> read_dataset(const std::string& path);

/// Dumps the realised stencil diagonal, right-hand side and region labels
/// (item_<id>_fields.csv) and the meta input (item_<id>_meta.csv) under dir.
void materialize(const Recipe& r, const Grid& g, const SmootherSpec& smoother, const std::string& dir);

}  // namespace fns
