#include "fns/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>

#include "fns/checkpoint.hpp"
#include "fns/csv.hpp"
#include "fns/dataset.hpp"
#include "fns/errors.hpp"
#include "fns/verify.hpp"

namespace fns {

namespace {

struct Context {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;
  std::string out;
  std::string checkpoint;
  std::string dataset;
  std::string corrector = "auto";
  bool materialize = false;
  bool rhs_study = false;
  double tau = 1e-6;
};

using FlagTable = std::vector<std::pair<const char*, const char*>>;

void add_overrides(CLI::App* sub, Context& c, const FlagTable& flags) {
  for (const auto& [flag, key] : flags) {
    const std::string k = key;
    sub->add_option_function<std::string>(
        flag, [&c, k](const std::string& v) { c.overrides.emplace_back(k, v); }, "sets " + k);
  }
}

void add_common(CLI::App* sub, Context& c) {
  sub->add_option("--config", c.config_path, "experiment config file");
  add_overrides(sub, c,
                {{"--pde", "problem.pde"},
                 {"--n", "problem.n"},
                 {"--xi", "problem.xi"},
                 {"--theta", "problem.theta"},
                 {"--theta-frac", "problem.theta_frac"},
                 {"--eps", "problem.eps"},
                 {"--wx", "problem.wx"},
                 {"--wy", "problem.wy"},
                 {"--blocks", "problem.blocks"},
                 {"--m", "problem.m"},
                 {"--coef-seed", "problem.coef_seed"},
                 {"--smoother", "smoother.kind"},
                 {"--omega", "smoother.omega"},
                 {"--sweeps", "smoother.sweeps"},
                 {"--variant", "corrector.variant"},
                 {"--mode", "corrector.mode"},
                 {"--partition", "partition.mode"},
                 {"--param", "partition.param"}});
}

void add_corrector_choice(CLI::App* sub, Context& c) {
  sub->add_option("--checkpoint", c.checkpoint, "trained corrector");
  sub->add_option("--corrector", c.corrector,
                  "auto (checkpoint, else reciprocal symbol for constant stencils, else none), none, symbol")
      ->check(CLI::IsMember({"auto", "none", "symbol"}));
}

ExperimentConfig resolve(const Context& c) {
  ExperimentConfig cfg = c.config_path.empty() ? ExperimentConfig{} : load_config(c.config_path);
  for (const auto& [k, v] : c.overrides) set_config_value(cfg, k, v);
  cfg.validate();
  return cfg;
}

std::string out_file(const Context& c, const ExperimentConfig& cfg, const std::string& name) {
  const std::filesystem::path p = c.out.empty() ? std::filesystem::path(cfg.out) / name : std::filesystem::path(c.out);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  return p.string();
}

std::string out_dir(const Context& c, const ExperimentConfig& cfg) {
  const std::string d = c.out.empty() ? cfg.out : c.out;
  std::filesystem::create_directories(d);
  return d;
}

std::optional<Checkpoint> maybe_checkpoint(const Context& c) {
  if (c.checkpoint.empty()) return std::nullopt;
  return load_checkpoint(c.checkpoint);
}

SpectralCorrector make_corrector(const Context& c, const std::optional<Checkpoint>& ck, const TrainItem& item) {
  const Grid& g = item.a.grid;
  if (ck) {
    if (ck->grid.dim != g.dim) throw ValidationError("checkpoint dimension does not match the problem");
    const Model model(ck->spec, g);
    const bool same = ck->grid == g || ck->spec.mode == TrainMode::meta;
    return model.build(same ? ck->params : transfer_params(ck->params, ck->grid, g), item);
  }
  const bool constant = item.a.is_constant();
  if (c.corrector == "symbol" || (c.corrector == "auto" && constant)) {
    if (!constant) throw ValidationError("--corrector symbol needs a constant stencil");
    return reciprocal_symbol_corrector(item.a);
  }
  return SpectralCorrector::diagonal(g);
}

Field make_problem_rhs(const ExperimentConfig& cfg, const TrainItem& item) {
  if (cfg.solve.rhs == "random") return item.b;
  return make_rhs(parse_rhs_kind(cfg.solve.rhs), item.a.grid, &item.a, cfg.solve.rhs_seed);
}

std::string status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iterations: return "max_iterations";
    case SolveStatus::diverged: return "diverged";
  }
  return "?";
}

std::string rhs_name(RhsKind k) {
  switch (k) {
    case RhsKind::f1: return "f1";
    case RhsKind::f2: return "f2";
    case RhsKind::f3: return "f3";
    case RhsKind::f4: return "f4";
  }
  return "?";
}

// --- subcommands ------------------------------------------------------------

int cmd_dataset(const Context& c, std::ostream& out) {
  const ExperimentConfig cfg = resolve(c);
  const std::string dir = out_dir(c, cfg);
  const auto recipes = sample_recipes(cfg, cfg.dataset.count, cfg.dataset.seed);
  write_dataset(dir + "/dataset.csv", recipes);
  if (c.materialize)
    for (const auto& r : recipes) materialize(r, cfg.grid(), cfg.smoother, dir + "/materialized");
  out << "wrote " << recipes.size() << " " << to_string(cfg.pde) << " recipes to " << dir << "/dataset.csv\n";
  return 0;
}

int cmd_lfa(const Context& c, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = resolve(c);
  const Grid g = cfg.grid();
  const Stencil9Field a = realize_operator(problem_recipe(cfg, 0), g);
  const SymbolMap sym = a.is_constant() ? jacobi_symbol(cfg.smoother, a) : sampled_symbol(cfg.smoother, a);
  std::optional<FrequencyMask> mask;
  try {
    mask = partition_frequencies(sym, cfg.partition, cfg.partition_param);
  } catch (const EmptyPartition& e) {
    err << "warning: " << e.what() << " (mu_B = " << e.mu_b << ")\n";
  }
  auto label = [&](int m1, int m2) {
    if (mask) return (*mask)(m1, m2) == FreqLabel::H ? "H" : "B";
    return cfg.partition == PartitionMode::threshold && std::abs(sym(m1, m2)) > cfg.partition_param ? "H" : "B";
  };
  CsvWriter w(out_file(c, cfg, "lfa.csv"), {"theta1", "theta2", "re", "im", "modulus", "label"});
  for (int m2 = 0; m2 < g.ey(); ++m2)
    for (int m1 = 0; m1 < g.ex(); ++m1) {
      const cplx v = sym(m1, m2);
      w.row({csv_number(sym.theta1(m1)), csv_number(sym.theta2(m2)), csv_number(v.real()), csv_number(v.imag()),
             csv_number(std::abs(v)), label(m1, m2)});
    }
  w.close();
  if (mask) {
    out << "mu_B = " << mask->mu_b << "\neps_B = " << mask->eps_b << "\n|H| = " << mask->count(FreqLabel::H)
        << " of " << g.extended_size() << "\n";
    if (g.dim == 2) out << "H components = " << h_region_components(*mask) << "\n";
  }
  return 0;
}

int cmd_train(const Context& c, std::ostream& out) {
  const ExperimentConfig cfg = resolve(c);
  if (cfg.smoother.kind != SmootherKind::jacobi) throw ValidationError("training uses the damped Jacobi smoother");
  const Grid g = cfg.grid();
  const auto recipes =
      c.dataset.empty() ? sample_recipes(cfg, cfg.dataset.count, cfg.dataset.seed) : read_dataset(c.dataset);
  if (recipes.empty()) throw ValidationError("training needs at least one dataset item");
  std::vector<TrainItem> items;
  for (const auto& r : recipes) {
    if (r.pde != cfg.pde) throw ValidationError("dataset pde does not match the config");
    items.push_back(realize(r, g, cfg.smoother));
  }
  const Model model(cfg.model, g);
  TrainConfig tc = cfg.train;
  tc.threads = env_threads();
  const std::string dir = out_dir(c, cfg);
  CsvWriter loss(dir + "/loss.csv", {"epoch", "loss", "lr", "K"});
  const int every = std::max(1, tc.epochs / 10);
  const TrainResult res = train(model, items, tc, nullptr, [&](const EpochRecord& r, const ParamVector&) {
    loss.row({csv_number(r.epoch), csv_number(r.loss), csv_number(r.lr), csv_number(r.K)});
    if (r.epoch % every == 0 || r.epoch == tc.epochs)
      out << "epoch " << r.epoch << " loss " << r.loss << " K " << r.K << "\n";
  });
  loss.close();
  Checkpoint ck;
  ck.grid = g;
  ck.spec = cfg.model;
  ck.params = res.params;
  if (!res.history.empty()) {
    ck.epoch = static_cast<std::uint64_t>(res.history.back().epoch);
    ck.loss = res.history.back().loss;
  }
  save_checkpoint(dir + "/checkpoint.fns", ck);
  out << "checkpoint written to " << dir << "/checkpoint.fns\n";
  return 0;
}

int cmd_solve(const Context& c, std::ostream& out) {
  const ExperimentConfig cfg = resolve(c);
  const Grid g = cfg.grid();
  const TrainItem item = realize(problem_recipe(cfg, cfg.solve.rhs_seed), g, cfg.smoother);
  const SpectralCorrector hc = make_corrector(c, maybe_checkpoint(c), item);
  if (c.rhs_study) {
    const RhsStudy st = rhs_independence_study(item.a, hc, cfg.smoother,
                                               {RhsKind::f1, RhsKind::f2, RhsKind::f3, RhsKind::f4}, 1.0,
                                               cfg.solve.rhs_seed, cfg.solve.opts);
    CsvWriter w(out_file(c, cfg, "rhs_study.csv"), {"rhs", "iterations", "contraction", "converged"});
    for (const auto& r : st.rows) {
      w.row({rhs_name(r.kind), csv_number(r.iterations), csv_number(r.contraction), csv_number(int{r.converged})});
      out << rhs_name(r.kind) << ": " << r.iterations << " iterations, contraction " << r.contraction << "\n";
    }
    w.close();
    out << "spread = " << st.spread << "\n";
    return 0;
  }
  const SolveReport rep = hybrid_solve(item.a, make_problem_rhs(cfg, item), cfg.smoother, hc, cfg.solve.opts);
  CsvWriter w(out_file(c, cfg, "history.csv"), {"iteration", "residual", "relative"});
  const double r0 = rep.residual_history.front();
  for (std::size_t k = 0; k < rep.residual_history.size(); ++k) {
    const double r = rep.residual_history[k];
    w.row({csv_number(static_cast<long long>(k)), csv_number(r), csv_number(r0 > 0.0 ? r / r0 : 0.0)});
  }
  w.close();
  out << "status = " << status_name(rep.status) << "\niterations = " << rep.iterations
      << "\ncontraction = " << rep.contraction_estimate << "\n";
  return 0;
}

int cmd_sweep(const Context& c, std::ostream& out) {
  const ExperimentConfig cfg = resolve(c);
  const auto ck = maybe_checkpoint(c);
  const std::vector<int> scales = cfg.solve.scales.empty() ? std::vector<int>{cfg.n} : cfg.solve.scales;
  std::map<int, std::vector<Recipe>> recipes;
  for (int n : scales) {
    ExperimentConfig at = cfg;
    at.n = n;
    recipes[n] = sample_recipes(at, cfg.solve.samples, cfg.solve.test_seed);
  }
  const ItemFactory items = [&](const Grid& g, int mu) { return realize(recipes.at(g.n)[mu], g, cfg.smoother); };
  const CorrectorFactory correctors = [&](const TrainItem& it) { return make_corrector(c, ck, it); };
  const auto rows = sweep_scales(items, correctors, cfg.smoother, scales, cfg.solve.samples, cfg.solve.opts,
                                 cfg.grid().dim);
  CsvWriter w(out_file(c, cfg, "sweep.csv"), {"scale", "mu_id", "iterations", "contraction", "converged"});
  for (const auto& r : rows)
    w.row({csv_number(r.scale), csv_number(r.mu_id), csv_number(r.iterations), csv_number(r.contraction),
           csv_number(int{r.converged})});
  w.close();
  for (const auto& s : summarize_sweep(rows))
    out << "N = " << s.scale << ": " << s.mean << " +- " << s.std << " iterations\n";
  return 0;
}

int cmd_verify(const Context& c, std::ostream& out) {
  const ExperimentConfig cfg = resolve(c);
  const Grid g = cfg.grid();
  const TrainItem item = realize(problem_recipe(cfg, cfg.solve.rhs_seed), g, cfg.smoother);
  const SpectralCorrector hc = make_corrector(c, maybe_checkpoint(c), item);
  AuditOptions opts;
  opts.mode = cfg.partition;
  opts.param = cfg.partition_param;
  opts.tau = c.tau;
  const AssumptionReport rep = audit(item.a, cfg.smoother, hc, opts);
  out << format_report(rep);
  if (!c.out.empty()) {
    CsvWriter w(out_file(c, cfg, "verify.csv"), {"m1", "m2", "label", "support", "l_sum", "matched"});
    for (const auto& r : rep.rows)
      w.row({csv_number(r.m1), csv_number(r.m2), r.label == FreqLabel::H ? "H" : "B", csv_number(r.support),
             csv_number(r.l_sum), csv_number(r.matched)});
    w.close();
  }
  return 0;
}

void write_stage(CsvWriter& w, const std::string& stage, const ExtendedField& x) {
  for (int m2 = 0; m2 < x.grid.ey(); ++m2)
    for (int m1 = 0; m1 < x.grid.ex(); ++m1) {
      const cplx v = x(m1, m2);
      w.row({stage, csv_number(m1), csv_number(m2), csv_number(v.real()), csv_number(v.imag())});
    }
}

void write_stage(CsvWriter& w, const std::string& stage, const Field& x) {
  for (int j = 0; j < x.grid.ny(); ++j)
    for (int i = 0; i < x.grid.nx(); ++i) {
      const cplx v = x(i, j);
      w.row({stage, csv_number(i), csv_number(j), csv_number(v.real()), csv_number(v.imag())});
    }
}

void write_flow(CsvWriter& w, const std::string& prefix, const SpectralCorrector& hc, const Field& r) {
  CorrectorActivation act;
  const Field y = apply_corrector(hc, r, &act);
  write_stage(w, prefix + "input", r);
  write_stage(w, prefix + "after_inverse_fft", act.after_inverse_fft);
  write_stage(w, prefix + "after_cstar", act.after_cstar);
  write_stage(w, prefix + "after_lambda", act.after_lambda);
  write_stage(w, prefix + "after_c", act.after_c);
  write_stage(w, prefix + "output", y);
}

int cmd_flow(const Context& c, std::ostream& out) {
  const ExperimentConfig cfg = resolve(c);
  const Grid g = cfg.grid();
  const TrainItem item = realize(problem_recipe(cfg, cfg.solve.rhs_seed), g, cfg.smoother);
  const SpectralCorrector hc = make_corrector(c, maybe_checkpoint(c), item);
  const Field r = make_problem_rhs(cfg, item);
  const std::string path = out_file(c, cfg, "flow.csv");
  CsvWriter w(path, {"stage", "i", "j", "re", "im"});
  if (hc.variant == CorrectorVariant::region_split) {
    for (int part = 0; part < 2; ++part) {
      Field in = r;
      if (hc.mask_input)
        for (std::size_t q = 0; q < in.size(); ++q)
          if (hc.mask.labels[q] != part + 1) in.values[q] = 0.0;
      write_flow(w, "r" + std::to_string(part + 1) + ".", hc.parts[part], in);
    }
    write_stage(w, "output", apply_corrector(hc, r));
  } else {
    write_flow(w, "", hc, r);
  }
  w.close();
  out << "corrector activations written to " << path << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fourier neural solver lab: local Fourier analysis, corrector training and hybrid solves", "fns"};
  app.require_subcommand(1, 1);
  Context c;

  auto* dataset = app.add_subcommand("dataset", "sample problem recipes and write dataset.csv under --out");
  add_common(dataset, c);
  add_overrides(dataset, c,
                {{"--count", "dataset.count"},
                 {"--seed", "dataset.seed"},
                 {"--m-min", "dataset.m_min"},
                 {"--m-max", "dataset.m_max"}});
  dataset->add_flag("--materialize", c.materialize, "also dump realised fields");
  dataset->add_option("--out", c.out, "output directory");

  auto* lfa = app.add_subcommand("lfa", "smoother symbol on the frequency lattice and its B/H partition");
  add_common(lfa, c);
  lfa->add_option("--out", c.out, "symbol CSV path");

  auto* trn = app.add_subcommand("train", "train a corrector; writes loss.csv and checkpoint.fns under --out");
  add_common(trn, c);
  add_overrides(trn, c,
                {{"--epochs", "train.epochs"},
                 {"--lr", "train.lr"},
                 {"--batch", "train.batch"},
                 {"--count", "dataset.count"},
                 {"--seed", "dataset.seed"},
                 {"--train-seed", "train.seed"}});
  trn->add_option("--dataset", c.dataset, "dataset.csv to train on (default: sample from the config)");
  trn->add_option("--out", c.out, "output directory");

  auto* solve = app.add_subcommand("solve", "hybrid solve of one problem; writes the residual history");
  add_common(solve, c);
  add_corrector_choice(solve, c);
  add_overrides(solve, c,
                {{"--rhs", "solve.rhs"}, {"--rhs-seed", "solve.rhs_seed"}, {"--tol", "solve.tol"}, {"--maxit", "solve.maxit"}});
  solve->add_flag("--rhs-study", c.rhs_study, "compare asymptotic contraction across f1..f4 instead");
  solve->add_option("--out", c.out, "CSV path");

  auto* sweep = app.add_subcommand("sweep", "iteration counts over held-out problems at several scales");
  add_common(sweep, c);
  add_corrector_choice(sweep, c);
  add_overrides(sweep, c,
                {{"--scales", "solve.scales"},
                 {"--samples", "solve.samples"},
                 {"--test-seed", "solve.test_seed"},
                 {"--tol", "solve.tol"},
                 {"--maxit", "solve.maxit"}});
  sweep->add_option("--out", c.out, "CSV path");

  auto* verify = app.add_subcommand("verify", "audit the convergence assumptions and the contraction bound");
  add_common(verify, c);
  add_corrector_choice(verify, c);
  verify->add_option("--tau", c.tau, "relative cutoff for the expansion support");
  verify->add_option("--out", c.out, "optional per-frequency CSV path");

  auto* flow = app.add_subcommand("flow", "dump the corrector's intermediate fields for one residual");
  add_common(flow, c);
  add_corrector_choice(flow, c);
  add_overrides(flow, c, {{"--rhs", "solve.rhs"}, {"--rhs-seed", "solve.rhs_seed"}});
  flow->add_option("--out", c.out, "CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.back()->help());
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.back()->help());
    return 1;
  }

  try {
    if (dataset->parsed()) return cmd_dataset(c, out);
    if (lfa->parsed()) return cmd_lfa(c, out, err);
    if (trn->parsed()) return cmd_train(c, out);
    if (solve->parsed()) return cmd_solve(c, out);
    if (sweep->parsed()) return cmd_sweep(c, out);
    if (verify->parsed()) return cmd_verify(c, out);
    if (flow->parsed()) return cmd_flow(c, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"fns"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace fns
