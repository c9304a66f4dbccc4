#include "fns/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>

#include "fns/csv.hpp"
#include "fns/errors.hpp"
#include "fns/rng.hpp"

namespace fns {

namespace {

// checkerboard seeds are redrawn along this stride when an island floats
constexpr std::uint64_t kRedrawStride = 1000003;
constexpr int kMaxRedraws = 1000;

std::uint64_t connected_checkerboard_seed(const Grid& g, int blocks, double m, std::uint64_t seed) {
  for (int k = 0; k < kMaxRedraws; ++k, seed += kRedrawStride)
    if (!has_floating_region(sample_checkerboard(g, blocks, m, seed).second)) return seed;
  throw DomainError("no checkerboard without a floating island found");
}

}  // namespace

std::vector<Recipe> sample_recipes(const ExperimentConfig& cfg, int count, std::uint64_t seed) {
  if (count < 0) throw ValidationError("dataset count must be non-negative");
  std::vector<Recipe> out;
  const Grid g = cfg.grid();
  for (int id = 0; id < count; ++id) {
    SeqRng rng(seed, static_cast<std::uint64_t>(id));
    Recipe r;
    r.id = id;
    r.pde = cfg.pde;
    r.params = cfg.problem;
    r.params.coef_seed = rng.bits();
    r.rhs_seed = rng.bits();
    switch (cfg.pde) {
      case PdeKind::anisotropic:
        r.params.xi = rng.uniform(1e-6, 1.0);
        r.params.theta = rng.uniform(-std::numbers::pi, std::numbers::pi);
        break;
      case PdeKind::convection_diffusion:
        r.params.eps = std::pow(10.0, -rng.uniform(0.0, 8.0));
        r.params.wx = rng.uniform(-1.0, 1.0);
        r.params.wy = rng.uniform(-1.0, 1.0);
        break;
      case PdeKind::jumping:
        r.params.m = cfg.dataset.m_min == cfg.dataset.m_max ? cfg.dataset.m_min
                                                            : rng.uniform(cfg.dataset.m_min, cfg.dataset.m_max);
        r.params.coef_seed = connected_checkerboard_seed(g, r.params.blocks, r.params.m, r.params.coef_seed);
        break;
      default:
        break;
    }
    out.push_back(r);
  }
  return out;
}

Recipe problem_recipe(const ExperimentConfig& cfg, std::uint64_t rhs_seed) {
  Recipe r;
  r.pde = cfg.pde;
  r.params = cfg.problem;
  r.rhs_seed = rhs_seed;
  return r;
}

Stencil9Field realize_operator(const Recipe& r, const Grid& g, RegionMask* mask) {
  const ProblemParams& p = r.params;
  switch (r.pde) {
    case PdeKind::random_diffusion:
      return assemble_random_diffusion(sample_grf_coefficient(g, p.coef_seed));
    case PdeKind::anisotropic:
      return assemble_anisotropic(p.xi, p.theta, g);
    case PdeKind::convection_diffusion:
      return assemble_convection_diffusion(p.eps, p.wx, p.wy, g);
    case PdeKind::jumping: {
      auto [a, m] = sample_checkerboard(g, p.blocks, p.m, p.coef_seed);
      if (mask) *mask = std::move(m);
      return assemble_jumping(a);
    }
    case PdeKind::poisson1d:
      return poisson1d(g);
  }
  throw ValidationError("unknown pde");
}

std::vector<double> meta_input(const Recipe& r, const Grid& g, const SmootherSpec& smoother) {
  const ProblemParams& p = r.params;
  switch (r.pde) {
    case PdeKind::random_diffusion: {
      const ElementField a = sample_grf_coefficient(g, p.coef_seed);
      std::vector<double> v(a.values.size());
      for (std::size_t q = 0; q < v.size(); ++q) v[q] = std::log(a.values[q]);
      return resample_to_lattice(v, g.n + 1, g.n + 1, g);
    }
    case PdeKind::jumping: {
      const NodeCoefficient a = sample_checkerboard(g, p.blocks, p.m, p.coef_seed).first;
      std::vector<double> v(a.values.size());
      for (std::size_t q = 0; q < v.size(); ++q) v[q] = std::log10(a.values[q]);
      return resample_to_lattice(v, g.nx(), g.ny(), g);
    }
    case PdeKind::anisotropic:
    case PdeKind::convection_diffusion: {
      const SymbolMap sym = jacobi_symbol(smoother, realize_operator(r, g));
      std::vector<double> v(sym.values.size());
      for (std::size_t q = 0; q < v.size(); ++q) v[q] = std::abs(sym.values[q]);
      return v;
    }
    case PdeKind::poisson1d:
      return std::vector<double>(g.extended_size(), 0.0);
  }
  throw ValidationError("unknown pde");
}

TrainItem realize(const Recipe& r, const Grid& g, const SmootherSpec& smoother) {
  TrainItem it;
  it.a = realize_operator(r, g, &it.mask);
  if (it.mask.labels.empty()) it.mask = RegionMask{g, std::vector<int>(g.size(), 1)};
  it.b = random_field(g, r.rhs_seed);
  it.meta_input = meta_input(r, g, smoother);
  return it;
}

std::vector<std::string> dataset_header() {
  return {"id", "pde", "xi", "theta", "eps", "wx", "wy", "blocks", "m", "coef_seed", "rhs_seed"};
}

void write_dataset(const std::string& path, const std::vector<Recipe>& recipes) {
  CsvWriter w(path, dataset_header());
  for (const auto& r : recipes) {
    const ProblemParams& p = r.params;
    w.row({csv_number(r.id), to_string(r.pde), csv_number(p.xi), csv_number(p.theta), csv_number(p.eps),
           csv_number(p.wx), csv_number(p.wy), csv_number(p.blocks), csv_number(p.m), csv_number(p.coef_seed),
           csv_number(r.rhs_seed)});
  }
  w.close();
}

std::vector<Recipe> read_dataset(const std::string& path) {
  const CsvTable t = read_csv(path);
  std::vector<std::size_t> col;
  for (const auto& name : dataset_header()) col.push_back(t.column(name));
  std::vector<Recipe> out;
  for (const auto& row : t.rows) {
    auto cell = [&](int k) -> const std::string& { return row[col[k]]; };
    Recipe r;
    r.id = static_cast<int>(parse_integer(cell(0), "id"));
    r.pde = parse_pde(cell(1));
    r.params.xi = parse_real(cell(2), "xi");
    r.params.theta = parse_real(cell(3), "theta");
    r.params.eps = parse_real(cell(4), "eps");
    r.params.wx = parse_real(cell(5), "wx");
    r.params.wy = parse_real(cell(6), "wy");
    r.params.blocks = static_cast<int>(parse_integer(cell(7), "blocks"));
    r.params.m = parse_real(cell(8), "m");
    r.params.coef_seed = parse_seed(cell(9), "coef_seed");
    r.rhs_seed = parse_seed(cell(10), "rhs_seed");
    out.push_back(r);
  }
  return out;
}

void materialize(const Recipe& r, const Grid& g, const SmootherSpec& smoother, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const TrainItem it = realize(r, g, smoother);
  const std::string stem = dir + "/item_" + std::to_string(r.id);
  {
    CsvWriter w(stem + "_fields.csv", {"i", "j", "diag", "rhs_re", "rhs_im", "region"});
    for (int j = 0; j < g.ny(); ++j)
      for (int i = 0; i < g.nx(); ++i) {
        const std::size_t q = g.index(i, j);
        w.row({csv_number(i), csv_number(j), csv_number(it.a.coeffs[q][C].real()), csv_number(it.b.values[q].real()),
               csv_number(it.b.values[q].imag()), csv_number(it.mask.labels[q])});
      }
    w.close();
  }
  CsvWriter w(stem + "_meta.csv", {"m1", "m2", "value"});
  for (int m2 = 0; m2 < g.ey(); ++m2)
    for (int m1 = 0; m1 < g.ex(); ++m1)
      w.row({csv_number(m1), csv_number(m2), csv_number(it.meta_input[g.extended_index(m1, m2)])});
  w.close();
}

}  // namespace fns
