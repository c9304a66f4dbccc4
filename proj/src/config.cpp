#include "fns/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>

#include "fns/errors.hpp"

namespace fns {

PdeKind parse_pde(const std::string& s) {
  if (s == "random_diffusion") return PdeKind::random_diffusion;
  if (s == "anisotropic") return PdeKind::anisotropic;
  if (s == "convection_diffusion") return PdeKind::convection_diffusion;
  if (s == "jumping") return PdeKind::jumping;
  if (s == "poisson1d") return PdeKind::poisson1d;
  throw ValidationError("unknown pde '" + s + "'");
}

std::string to_string(PdeKind k) {
  switch (k) {
    case PdeKind::random_diffusion: return "random_diffusion";
    case PdeKind::anisotropic: return "anisotropic";
    case PdeKind::convection_diffusion: return "convection_diffusion";
    case PdeKind::jumping: return "jumping";
    case PdeKind::poisson1d: return "poisson1d";
  }
  return "?";
}

CorrectorVariant parse_variant(const std::string& s) {
  if (s == "diagonal") return CorrectorVariant::diagonal;
  if (s == "conv") return CorrectorVariant::conv;
  if (s == "region_split") return CorrectorVariant::region_split;
  throw ValidationError("unknown corrector variant '" + s + "'");
}

std::string to_string(CorrectorVariant v) {
  switch (v) {
    case CorrectorVariant::diagonal: return "diagonal";
    case CorrectorVariant::conv: return "conv";
    case CorrectorVariant::region_split: return "region_split";
  }
  return "?";
}

double parse_real(const std::string& s, const std::string& what) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ValidationError(what + ": '" + s + "' is not a number");
  return v;
}

long long parse_integer(const std::string& s, const std::string& what) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ValidationError(what + ": '" + s + "' is not an integer");
  return v;
}

std::vector<int> parse_int_list(const std::string& s, const std::string& what) {
  std::vector<int> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t end = std::min(s.find(',', start), s.size());
    std::string item = s.substr(start, end - start);
    while (!item.empty() && item.front() == ' ') item.erase(item.begin());
    while (!item.empty() && item.back() == ' ') item.pop_back();
    if (!item.empty()) out.push_back(static_cast<int>(parse_integer(item, what)));
    start = end + 1;
  }
  return out;
}

std::uint64_t parse_seed(const std::string& s, const std::string& what) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ValidationError(what + ": '" + s + "' is not a seed");
  return v;
}

namespace {

bool parse_bool(const std::string& s, const std::string& what) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ValidationError(what + ": '" + s + "' is not a boolean");
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  using C = ExperimentConfig;
  using S = std::string;
  auto real = [](auto member) {
    return Setter([member](C& c, const S& v, const S& k) { member(c) = parse_real(v, k); });
  };
  auto integer = [](auto member) {
    return Setter([member](C& c, const S& v, const S& k) {
      member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(parse_integer(v, k));
    });
  };
  auto seed = [](auto member) {
    return Setter([member](C& c, const S& v, const S& k) { member(c) = parse_seed(v, k); });
  };
  auto flag = [](auto member) {
    return Setter([member](C& c, const S& v, const S& k) { member(c) = parse_bool(v, k); });
  };
  static const std::map<std::string, Setter> table = {
      {"problem.pde", [](C& c, const S& v, const S&) { c.pde = parse_pde(v); }},
      {"problem.n", integer([](C& c) -> int& { return c.n; })},
      {"problem.xi", real([](C& c) -> double& { return c.problem.xi; })},
      {"problem.theta", real([](C& c) -> double& { return c.problem.theta; })},
      {"problem.theta_frac",
       [](C& c, const S& v, const S& k) { c.problem.theta = parse_real(v, k) * std::numbers::pi; }},
      {"problem.eps", real([](C& c) -> double& { return c.problem.eps; })},
      {"problem.wx", real([](C& c) -> double& { return c.problem.wx; })},
      {"problem.wy", real([](C& c) -> double& { return c.problem.wy; })},
      {"problem.blocks", integer([](C& c) -> int& { return c.problem.blocks; })},
      {"problem.m", real([](C& c) -> double& { return c.problem.m; })},
      {"problem.coef_seed", seed([](C& c) -> std::uint64_t& { return c.problem.coef_seed; })},
      {"smoother.kind",
       [](C& c, const S& v, const S&) {
         if (v == "jacobi")
           c.smoother.kind = SmootherKind::jacobi;
         else if (v == "richardson")
           c.smoother.kind = SmootherKind::richardson;
         else
           throw ValidationError("unknown smoother '" + v + "'");
       }},
      {"smoother.omega", real([](C& c) -> double& { return c.smoother.omega; })},
      {"smoother.sweeps", integer([](C& c) -> int& { return c.smoother.sweeps; })},
      {"corrector.variant", [](C& c, const S& v, const S&) { c.model.variant = parse_variant(v); }},
      {"corrector.mode",
       [](C& c, const S& v, const S&) {
         if (v == "direct")
           c.model.mode = TrainMode::direct;
         else if (v == "meta")
           c.model.mode = TrainMode::meta;
         else
           throw ValidationError("unknown training mode '" + v + "'");
       }},
      {"corrector.kernel_size", integer([](C& c) -> int& { return c.model.kernel_size; })},
      {"corrector.depth", integer([](C& c) -> int& { return c.model.depth; })},
      {"corrector.normalize_by_diagonal", flag([](C& c) -> bool& { return c.model.normalize_by_diagonal; })},
      {"corrector.mask_input", flag([](C& c) -> bool& { return c.model.mask_input; })},
      {"corrector.lambda_hidden", integer([](C& c) -> int& { return c.model.lambda_hidden; })},
      {"corrector.lambda_kernel", integer([](C& c) -> int& { return c.model.lambda_kernel; })},
      {"corrector.t_hidden", integer([](C& c) -> int& { return c.model.t_hidden; })},
      {"corrector.t_kernel", integer([](C& c) -> int& { return c.model.t_kernel; })},
      {"partition.mode",
       [](C& c, const S& v, const S&) {
         if (v == "box")
           c.partition = PartitionMode::box;
         else if (v == "threshold")
           c.partition = PartitionMode::threshold;
         else
           throw ValidationError("unknown partition mode '" + v + "'");
       }},
      {"partition.param", real([](C& c) -> double& { return c.partition_param; })},
      {"dataset.count", integer([](C& c) -> int& { return c.dataset.count; })},
      {"dataset.seed", seed([](C& c) -> std::uint64_t& { return c.dataset.seed; })},
      {"dataset.m_min", real([](C& c) -> double& { return c.dataset.m_min; })},
      {"dataset.m_max", real([](C& c) -> double& { return c.dataset.m_max; })},
      {"train.epochs", integer([](C& c) -> int& { return c.train.epochs; })},
      {"train.batch", integer([](C& c) -> int& { return c.train.batch; })},
      {"train.lr", real([](C& c) -> double& { return c.train.lr; })},
      {"train.lr_halving_period", integer([](C& c) -> int& { return c.train.lr_halving_period; })},
      {"train.k_initial", integer([](C& c) -> int& { return c.train.K; })},
      {"train.k_increase_period", integer([](C& c) -> int& { return c.train.k_increase_period; })},
      {"train.k_max", integer([](C& c) -> int& { return c.train.k_max; })},
      {"train.seed", seed([](C& c) -> std::uint64_t& { return c.train.seed; })},
      {"solve.tol", real([](C& c) -> double& { return c.solve.opts.tol; })},
      {"solve.maxit", integer([](C& c) -> int& { return c.solve.opts.maxit; })},
      {"solve.rhs",
       [](C& c, const S& v, const S&) {
         if (v != "random") parse_rhs_kind(v);
         c.solve.rhs = v;
       }},
      {"solve.rhs_seed", seed([](C& c) -> std::uint64_t& { return c.solve.rhs_seed; })},
      {"solve.scales", [](C& c, const S& v, const S& k) { c.solve.scales = parse_int_list(v, k); }},
      {"solve.samples", integer([](C& c) -> int& { return c.solve.samples; })},
      {"solve.test_seed", seed([](C& c) -> std::uint64_t& { return c.solve.test_seed; })},
      {"output.dir", [](C& c, const S& v, const S&) { c.out = v; }},
  };
  return table;
}

void sync_train(ExperimentConfig& c) {
  c.train.M = c.smoother.sweeps;
  c.train.omega = c.smoother.omega;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

bool valid_size(int n) { return n >= 1 && is_power_of_two(2 * (n + 1)); }

}  // namespace

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ValidationError("unknown config key '" + key + "'");
  it->second(cfg, value, key);
  sync_train(cfg);
}

ExperimentConfig parse_config(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  ExperimentConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ValidationError("config: key '" + section + "' outside a section");
    for (const auto& [key, value] : body) set_config_value(cfg, section + "." + key, value.data());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  return parse_config(in);
}

void ExperimentConfig::validate() const {
  require(valid_size(n), "n must satisfy 2(n+1) = power of two, got " + std::to_string(n));
  try {
    smoother.validate();
  } catch (const Error& e) {
    throw ValidationError(e.what());
  }
  const ProblemParams& p = problem;
  switch (pde) {
    case PdeKind::anisotropic:
      require(p.xi > 0.0 && p.xi <= 1.0, "xi must lie in (0, 1]");
      break;
    case PdeKind::convection_diffusion:
      require(p.eps > 0.0, "eps must be positive");
      break;
    case PdeKind::jumping:
      require(p.blocks >= 1, "blocks must be at least 1");
      require(p.m > 0.0, "m must be positive");
      require(dataset.m_min > 0.0 && dataset.m_min <= dataset.m_max, "need 0 < m_min <= m_max");
      break;
    default:
      break;
  }
  if (model.variant == CorrectorVariant::region_split)
    require(pde == PdeKind::jumping, "region_split needs the jumping problem (it carries the region mask)");
  if (pde == PdeKind::poisson1d)
    require(model.mode == TrainMode::direct, "poisson1d supports direct mode only");
  require(model.kernel_size >= 1 && model.kernel_size % 2 == 1, "kernel_size must be odd and positive");
  require(model.depth >= 0, "depth must be non-negative (0 keeps region parts diagonal)");
  require(model.lambda_hidden >= 1 && model.t_hidden >= 1, "hidden widths must be positive");
  require(model.lambda_kernel >= 1 && model.lambda_kernel % 2 == 1, "lambda_kernel must be odd");
  require(model.t_kernel >= 1 && model.t_kernel % 2 == 1, "t_kernel must be odd");
  require(model.meta_input_channels == 1, "meta input uses one problem channel");
  if (partition == PartitionMode::threshold) require(partition_param > 0.0, "threshold level must be positive");
  require(dataset.count >= 0, "dataset count must be non-negative");
  require(train.epochs >= 0, "epochs must be non-negative");
  require(train.batch >= 1, "batch must be positive");
  require(train.lr > 0.0, "lr must be positive");
  require(train.K >= 1 && train.k_max >= train.K, "need 1 <= k_initial <= k_max");
  require(train.lr_halving_period >= 0 && train.k_increase_period >= 0, "schedule periods must be non-negative");
  require(solve.opts.tol > 0.0, "tol must be positive");
  require(solve.opts.maxit >= 1, "maxit must be positive");
  require(solve.samples >= 1, "samples must be positive");
  for (int s : solve.scales) require(valid_size(s), "scale " + std::to_string(s) + " is not a valid grid size");
}

}  // namespace fns
