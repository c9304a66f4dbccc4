#include "fns/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <numeric>
#include <thread>

#include "fns/errors.hpp"
#include "fns/rng.hpp"

namespace fns {

// --- ParamVector ------------------------------------------------------------

std::size_t ParamVector::add(const std::string& name, std::size_t length) {
  if (has(name)) throw ValidationError("duplicate parameter segment " + name);
  segments.push_back({name, values.size(), length});
  values.resize(values.size() + length, 0.0);
  return segments.back().offset;
}

bool ParamVector::has(const std::string& name) const {
  return std::any_of(segments.begin(), segments.end(), [&](const Segment& s) { return s.name == name; });
}

const Segment& ParamVector::segment(const std::string& name) const {
  for (const auto& s : segments)
    if (s.name == name) return s;
  throw ValidationError("missing parameter segment " + name);
}

std::span<double> ParamVector::view(const std::string& name) {
  const Segment& s = segment(name);
  return std::span<double>(values).subspan(s.offset, s.length);
}

std::span<const double> ParamVector::view(const std::string& name) const {
  const Segment& s = segment(name);
  return std::span<const double>(values).subspan(s.offset, s.length);
}

// --- Model -------------------------------------------------------------------

namespace {

std::vector<std::string> prefixes(const ModelSpec& s) {
  if (s.variant == CorrectorVariant::region_split) return {"r1.", "r2."};
  return {""};
}

bool has_kernels(const ModelSpec& s) { return s.kernel_size > 0 && s.depth > 0 && s.variant != CorrectorVariant::diagonal; }

std::size_t kernel_taps(const ModelSpec& s, int dim) {
  return dim == 2 ? static_cast<std::size_t>(s.kernel_size) * s.kernel_size
                  : static_cast<std::size_t>(s.kernel_size);
}

std::span<double> sub(std::span<double> out, const ParamVector& p, const std::string& name) {
  const Segment& s = p.segment(name);
  return out.subspan(s.offset, s.length);
}

void fill_normal(std::span<double> v, SeqRng& rng, double sd) {
  for (auto& x : v) x = sd * rng.normal();
}

}  // namespace

Model::Model(ModelSpec spec, Grid grid) : spec_(spec), grid_(grid) {
  freq_channels_ = frequency_channels(grid_);
}

MetaLambdaShape Model::lambda_shape() const {
  return {spec_.meta_input_channels + kFrequencyChannels, spec_.lambda_hidden, spec_.lambda_kernel, grid_.dim};
}

MetaTShape Model::t_shape() const {
  return {spec_.meta_input_channels + kFrequencyChannels, spec_.t_hidden, spec_.t_kernel, grid_.dim,
          static_cast<int>(2 * kernel_taps(spec_, grid_.dim) * spec_.depth)};
}

ParamVector Model::init_params(std::uint64_t seed) const {
  ParamVector p;
  SeqRng rng(seed, 0x1a17);
  const std::size_t taps = kernel_taps(spec_, grid_.dim);
  for (const auto& pre : prefixes(spec_)) {
    if (spec_.mode == TrainMode::direct) {
      p.add(pre + "lambda", 2 * grid_.extended_size());
      if (has_kernels(spec_))
        for (int d = 0; d < spec_.depth; ++d) {
          const std::string name = pre + "kernel" + std::to_string(d);
          p.add(name, 2 * taps);
          auto v = p.view(name);
          fill_normal(v, rng, 1e-3);
          v[2 * (taps / 2)] += 1.0;
        }
      continue;
    }
    const MetaLambdaShape ls = lambda_shape();
    const std::string ml = pre + "meta_lambda.";
    p.add(ml + "w1", ls.first().weight_count());
    p.add(ml + "b1", ls.hidden);
    p.add(ml + "w2", ls.second().weight_count());
    p.add(ml + "b2", 2);
    fill_normal(p.view(ml + "w1"), rng, 1.0 / std::sqrt(static_cast<double>(ls.first().cin * ls.first().taps())));
    for (auto& b : p.view(ml + "b1")) b = 0.1;
    fill_normal(p.view(ml + "w2"), rng, 1e-3);
    if (has_kernels(spec_)) {
      const MetaTShape ts = t_shape();
      const std::string mt = pre + "meta_t.";
      p.add(mt + "w1", ts.first().weight_count());
      p.add(mt + "b1", ts.hidden);
      p.add(mt + "w2", ts.second().weight_count());
      p.add(mt + "b2", ts.hidden);
      p.add(mt + "a", static_cast<std::size_t>(ts.outputs) * ts.hidden);
      p.add(mt + "c", ts.outputs);
      fill_normal(p.view(mt + "w1"), rng, 1.0 / std::sqrt(static_cast<double>(ts.first().cin * ts.first().taps())));
      fill_normal(p.view(mt + "w2"), rng, 1.0 / std::sqrt(static_cast<double>(ts.second().cin * ts.second().taps())));
      fill_normal(p.view(mt + "a"), rng, 1e-3);
      auto c = p.view(mt + "c");
      fill_normal(c, rng, 1e-3);
      for (int d = 0; d < spec_.depth; ++d) c[2 * (d * taps + taps / 2)] += 1.0;
    }
  }
  return p;
}

std::vector<double> Model::full_input(const TrainItem& item) const {
  const std::size_t sz = grid_.extended_size();
  if (item.meta_input.size() != sz * spec_.meta_input_channels)
    throw ShapeMismatch("meta input does not match the configured channel count");
  std::vector<double> in = item.meta_input;
  in.insert(in.end(), freq_channels_.begin(), freq_channels_.end());
  return in;
}

SpectralCorrector Model::build_single(const ParamVector& p, const std::string& pre,
                                      const std::vector<double>* input) const {
  SpectralCorrector hc = has_kernels(spec_) ? SpectralCorrector::conv(grid_, spec_.kernel_size, spec_.depth)
                                            : SpectralCorrector::diagonal(grid_);
  const std::size_t taps = kernel_taps(spec_, grid_.dim);
  if (spec_.mode == TrainMode::direct) {
    auto lam = p.view(pre + "lambda");
    if (lam.size() != 2 * hc.lambda.size()) throw ShapeMismatch("lambda segment does not match grid");
    for (std::size_t q = 0; q < hc.lambda.size(); ++q) hc.lambda[q] = {lam[2 * q], lam[2 * q + 1]};
    for (int d = 0; d < static_cast<int>(hc.kernels.size()); ++d) {
      auto k = p.view(pre + "kernel" + std::to_string(d));
      for (std::size_t q = 0; q < taps; ++q) hc.kernels[d].taps[q] = {k[2 * q], k[2 * q + 1]};
    }
    return hc;
  }
  const std::string ml = pre + "meta_lambda.";
  const MetaLambdaParams lp{p.view(ml + "w1"), p.view(ml + "b1"), p.view(ml + "w2"), p.view(ml + "b2")};
  hc.lambda = meta_lambda_forward(lambda_shape(), grid_, lp, *input);
  if (!hc.kernels.empty()) {
    const std::string mt = pre + "meta_t.";
    const MetaTParams tp{p.view(mt + "w1"), p.view(mt + "b1"), p.view(mt + "w2"),
                         p.view(mt + "b2"), p.view(mt + "a"),  p.view(mt + "c")};
    const auto out = meta_t_forward(t_shape(), grid_, tp, *input);
    for (int d = 0; d < spec_.depth; ++d)
      for (std::size_t q = 0; q < taps; ++q)
        hc.kernels[d].taps[q] = {out[2 * (d * taps + q)], out[2 * (d * taps + q) + 1]};
  }
  return hc;
}

SpectralCorrector Model::build(const ParamVector& p, const TrainItem& item) const {
  require_same_grid(grid_, item.a.grid, "Model::build");
  std::vector<double> input;
  if (spec_.mode == TrainMode::meta) input = full_input(item);
  if (spec_.variant == CorrectorVariant::region_split) {
    SpectralCorrector p1 = build_single(p, "r1.", &input);
    SpectralCorrector p2 = build_single(p, "r2.", &input);
    if (spec_.normalize_by_diagonal) {
      p1.scale = 1.0 / mean_abs_diagonal(item.a, &item.mask, 1);
      p2.scale = 1.0 / mean_abs_diagonal(item.a, &item.mask, 2);
    }
    SpectralCorrector hc = SpectralCorrector::region_split(item.mask, std::move(p1), std::move(p2));
    hc.mask_input = spec_.mask_input;
    return hc;
  }
  SpectralCorrector hc = build_single(p, "", &input);
  if (spec_.normalize_by_diagonal) hc.scale = 1.0 / mean_abs_diagonal(item.a);
  return hc;
}

void Model::backprop_single(const ParamVector& p, const std::string& pre,
                            const std::vector<double>* input, const CorrectorGrad& g,
                            std::span<double> out) const {
  const std::size_t taps = kernel_taps(spec_, grid_.dim);
  if (spec_.mode == TrainMode::direct) {
    auto lam = sub(out, p, pre + "lambda");
    for (std::size_t q = 0; q < g.lambda.size(); ++q) {
      lam[2 * q] += g.lambda[q].real();
      lam[2 * q + 1] += g.lambda[q].imag();
    }
    for (std::size_t d = 0; d < g.kernels.size(); ++d) {
      auto k = sub(out, p, pre + "kernel" + std::to_string(d));
      for (std::size_t q = 0; q < taps; ++q) {
        k[2 * q] += g.kernels[d][q].real();
        k[2 * q + 1] += g.kernels[d][q].imag();
      }
    }
    return;
  }
  const std::string ml = pre + "meta_lambda.";
  const MetaLambdaParams lp{p.view(ml + "w1"), p.view(ml + "b1"), p.view(ml + "w2"), p.view(ml + "b2")};
  MetaLambdaGrads lg{sub(out, p, ml + "w1"), sub(out, p, ml + "b1"), sub(out, p, ml + "w2"),
                     sub(out, p, ml + "b2")};
  meta_lambda_backward(lambda_shape(), grid_, lp, *input, g.lambda, lg);
  if (!g.kernels.empty()) {
    const std::string mt = pre + "meta_t.";
    const MetaTParams tp{p.view(mt + "w1"), p.view(mt + "b1"), p.view(mt + "w2"),
                         p.view(mt + "b2"), p.view(mt + "a"),  p.view(mt + "c")};
    MetaTGrads tg{sub(out, p, mt + "w1"), sub(out, p, mt + "b1"), sub(out, p, mt + "w2"),
                  sub(out, p, mt + "b2"), sub(out, p, mt + "a"),  sub(out, p, mt + "c")};
    std::vector<double> out_bar(2 * taps * spec_.depth);
    for (int d = 0; d < spec_.depth; ++d)
      for (std::size_t q = 0; q < taps; ++q) {
        out_bar[2 * (d * taps + q)] = g.kernels[d][q].real();
        out_bar[2 * (d * taps + q) + 1] = g.kernels[d][q].imag();
      }
    meta_t_backward(t_shape(), grid_, tp, *input, out_bar, tg);
  }
}

void Model::backprop(const ParamVector& p, const TrainItem& item, const CorrectorGrad& g,
                     std::span<double> out) const {
  std::vector<double> input;
  if (spec_.mode == TrainMode::meta) input = full_input(item);
  if (spec_.variant == CorrectorVariant::region_split) {
    backprop_single(p, "r1.", &input, g.parts[0], out);
    backprop_single(p, "r2.", &input, g.parts[1], out);
    return;
  }
  backprop_single(p, "", &input, g, out);
}

// --- transfer across grids ----------------------------------------------------

ParamVector transfer_params(const ParamVector& p, const Grid& from, const Grid& to) {
  ParamVector out;
  for (const auto& seg : p.segments) {
    const bool is_lambda = seg.name == "lambda" || seg.name.ends_with(".lambda");
    if (!is_lambda || from == to) {
      out.add(seg.name, seg.length);
      auto src = p.view(seg.name);
      std::copy(src.begin(), src.end(), out.view(seg.name).begin());
      continue;
    }
    out.add(seg.name, 2 * to.extended_size());
    auto src = p.view(seg.name);
    auto dst = out.view(seg.name);
    auto at = [&](int m1, int m2) {
      m1 = (m1 % from.ex() + from.ex()) % from.ex();
      m2 = from.dim == 2 ? (m2 % from.ey() + from.ey()) % from.ey() : 0;
      const std::size_t q = from.extended_index(m1, m2);
      return cplx(src[2 * q], src[2 * q + 1]);
    };
    for (int m2 = 0; m2 < to.ey(); ++m2)
      for (int m1 = 0; m1 < to.ex(); ++m1) {
        // position on the source lattice in units of bins, through theta
        const double x = lattice_theta(m1, to.ex()) / (2.0 * std::numbers::pi) * from.ex();
        const double y = to.dim == 2 ? lattice_theta(m2, to.ey()) / (2.0 * std::numbers::pi) * from.ey() : 0.0;
        const int x0 = static_cast<int>(std::floor(x));
        const int y0 = static_cast<int>(std::floor(y));
        const double fx = x - x0;
        const double fy = y - y0;
        cplx v = (1 - fx) * (1 - fy) * at(x0, y0) + fx * (1 - fy) * at(x0 + 1, y0);
        if (to.dim == 2) v += (1 - fx) * fy * at(x0, y0 + 1) + fx * fy * at(x0 + 1, y0 + 1);
        const std::size_t q = to.extended_index(m1, m2);
        dst[2 * q] = v.real();
        dst[2 * q + 1] = v.imag();
      }
  }
  return out;
}

// --- loss and gradient --------------------------------------------------------

double item_loss(const Stencil9Field& a, const Field& b, const SpectralCorrector& hc,
                 const LossConfig& cfg, CorrectorGrad* grad) {
  const double nb = norm2(b);
  if (nb == 0.0) throw ZeroRhs("loss needs a non-zero right-hand side");
  Field u(b.grid);
  std::vector<Field> tape;
  tape.reserve(cfg.K);
  for (int k = 0; k < cfg.K; ++k) {
    u = smooth(cfg.smoother, a, u, b);
    Field r = b - apply_stencil(a, u);
    const Field c = apply_corrector(hc, r);
    axpy(1.0, c, u);
    if (grad) tape.push_back(std::move(r));
  }
  const Field r = b - apply_stencil(a, u);
  const double nr = norm2(r);
  const double loss = nr / nb;
  // a round-off level residual is the minimiser; take the zero subgradient there
  if (!grad || nr <= 64 * std::numeric_limits<double>::epsilon() * nb) return loss;

  Field r_bar = (1.0 / (nr * nb)) * r;
  Field u_bar = -1.0 * apply_stencil_adjoint(a, r_bar);
  for (int k = cfg.K - 1; k >= 0; --k) {
    const Field rk_bar = corrector_backward(hc, tape[k], u_bar, *grad);
    axpy(-1.0, apply_stencil_adjoint(a, rk_bar), u_bar);
    u_bar = error_propagation_adjoint(cfg.smoother, a, u_bar);
  }
  return loss;
}

int env_threads() {
  if (const char* s = std::getenv("FNS_THREADS")) {
    const int t = std::atoi(s);
    if (t > 0) return t;
  }
  return 1;
}

double batch_loss(const Model& model, const ParamVector& p, std::span<const TrainItem> items,
                  const LossConfig& cfg, std::vector<double>* grad, int threads) {
  const std::size_t n = items.size();
  if (n == 0) throw ValidationError("empty batch");
  std::vector<double> losses(n, 0.0);
  std::vector<std::vector<double>> grads(grad ? n : 0);
  auto work = [&](std::size_t i) {
    const SpectralCorrector hc = model.build(p, items[i]);
    if (!grad) {
      losses[i] = item_loss(items[i].a, items[i].b, hc, cfg, nullptr);
      return;
    }
    CorrectorGrad cg = CorrectorGrad::zeros_like(hc);
    losses[i] = item_loss(items[i].a, items[i].b, hc, cfg, &cg);
    grads[i].assign(p.size(), 0.0);
    model.backprop(p, items[i], cg, grads[i]);
  };
  const int t = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (t == 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(t);
    for (int w = 0; w < t; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += t) work(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  double total = 0.0;
  for (double l : losses) total += l;
  if (grad) {
    grad->assign(p.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t q = 0; q < p.size(); ++q) (*grad)[q] += grads[i][q];
    for (auto& g : *grad) g /= static_cast<double>(n);
  }
  return total / static_cast<double>(n);
}

// --- optimiser ---------------------------------------------------------------

void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& state,
               double lr, double beta1, double beta2, double eps) {
  if (grads.size() != params.size()) throw ShapeMismatch("adam_step: gradient length mismatch");
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size()) throw ShapeMismatch("adam_step: state length mismatch");
  ++state.t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (std::size_t q = 0; q < params.size(); ++q) {
    state.m[q] = beta1 * state.m[q] + (1.0 - beta1) * grads[q];
    state.v[q] = beta2 * state.v[q] + (1.0 - beta2) * grads[q] * grads[q];
    const double mh = state.m[q] / c1;
    const double vh = state.v[q] / c2;
    params[q] -= lr * mh / (std::sqrt(vh) + eps);
  }
}

double scheduled_lr(const TrainConfig& cfg, int epoch) {
  const int halvings = cfg.lr_halving_period > 0 ? (epoch - 1) / cfg.lr_halving_period : 0;
  return cfg.lr * std::pow(0.5, halvings);
}

int scheduled_k(const TrainConfig& cfg, int epoch) {
  const int inc = cfg.k_increase_period > 0 ? (epoch - 1) / cfg.k_increase_period : 0;
  return std::min(cfg.k_max, cfg.K + inc);
}

TrainResult train(const Model& model, std::span<const TrainItem> items, const TrainConfig& cfg,
                  const ParamVector* init, const EpochCallback& on_epoch) {
  if (items.empty()) throw ValidationError("training set is empty");
  if (cfg.batch < 1 || cfg.epochs < 1 || !(cfg.lr > 0.0))
    throw ValidationError("batch, epochs and lr must be positive");
  TrainResult res;
  res.params = init ? *init : model.init_params(cfg.seed);
  AdamState state;
  const CounterRng order_rng(cfg.seed, 0x0dde);
  std::vector<std::size_t> order(items.size());
  std::vector<double> grad;
  std::vector<TrainItem> batch;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double lr = scheduled_lr(cfg, epoch);
    LossConfig lc;
    lc.smoother = {SmootherKind::jacobi, cfg.omega, cfg.M};
    lc.K = scheduled_k(cfg, epoch);
    std::iota(order.begin(), order.end(), 0);
    const CounterRng er = order_rng.substream(static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(er.bits(i) % i);
      std::swap(order[i - 1], order[j]);
    }
    double epoch_loss = 0.0;
    int steps = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch);
      std::vector<std::size_t> idx(order.begin() + start, order.begin() + stop);
      std::sort(idx.begin(), idx.end());
      batch.clear();
      for (auto i : idx) batch.push_back(items[i]);
      epoch_loss += batch_loss(model, res.params, batch, lc, &grad, cfg.threads);
      adam_step(res.params.values, grad, state, lr);
      ++steps;
    }
    const EpochRecord rec{epoch, epoch_loss / steps, lr, lc.K};
    res.history.push_back(rec);
    if (on_epoch) on_epoch(rec, res.params);
  }
  return res;
}

}  // namespace fns
