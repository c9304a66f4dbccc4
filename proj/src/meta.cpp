#include "fns/meta.hpp"

#include <algorithm>
#include <cmath>

#include "fns/errors.hpp"

namespace fns {

namespace {

// smooth rectifier; keeps the meta maps differentiable everywhere
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// inverse of the Laplacian-symbol channel, the first appended frequency channel
std::vector<double> rho_channel(const MetaLambdaShape& s, const Grid& g, const std::vector<double>& input) {
  const std::size_t sz = g.extended_size();
  if (input.size() != sz * s.in_channels || s.in_channels < kFrequencyChannels)
    throw ShapeMismatch("meta-lambda input lacks the frequency channels");
  const double* lap = input.data() + sz * (s.in_channels - kFrequencyChannels);
  std::vector<double> rho(sz);
  for (std::size_t q = 0; q < sz; ++q) rho[q] = lap[q] > 0.0 ? 1.0 / lap[q] : 0.0;
  return rho;
}

}  // namespace

namespace {

int wrap(int v, int n) {
  v %= n;
  return v < 0 ? v + n : v;
}

struct Tap {
  int dx, dy;
};

std::vector<Tap> tap_offsets(const ConvShape& s) {
  const int r = s.k / 2;
  std::vector<Tap> t;
  const int r2 = s.dim == 2 ? r : 0;
  for (int q2 = -r2; q2 <= r2; ++q2)
    for (int q1 = -r; q1 <= r; ++q1) t.push_back({q1, q2});
  return t;
}

}  // namespace

void conv_forward(const ConvShape& s, const Grid& g, std::span<const double> w,
                  std::span<const double> b, const std::vector<double>& in, std::vector<double>& out) {
  const int ex = g.ex();
  const int ey = g.ey();
  const std::size_t sz = g.extended_size();
  if (in.size() != sz * s.cin || w.size() != s.weight_count() || b.size() != static_cast<std::size_t>(s.cout))
    throw ShapeMismatch("conv_forward: shape mismatch");
  out.assign(sz * s.cout, 0.0);
  const auto taps = tap_offsets(s);
  for (int o = 0; o < s.cout; ++o) {
    double* dst = out.data() + sz * o;
    std::fill(dst, dst + sz, b[o]);
    for (int i = 0; i < s.cin; ++i) {
      const double* src = in.data() + sz * i;
      for (std::size_t q = 0; q < taps.size(); ++q) {
        const double wt = w[(static_cast<std::size_t>(o) * s.cin + i) * taps.size() + q];
        if (wt == 0.0) continue;
        if (taps[q].dx == 0 && taps[q].dy == 0) {
          for (std::size_t p = 0; p < sz; ++p) dst[p] += wt * src[p];
          continue;
        }
        for (int m2 = 0; m2 < ey; ++m2) {
          const double* row = src + static_cast<std::size_t>(wrap(m2 - taps[q].dy, ey)) * ex;
          double* drow = dst + static_cast<std::size_t>(m2) * ex;
          for (int m1 = 0; m1 < ex; ++m1) drow[m1] += wt * row[wrap(m1 - taps[q].dx, ex)];
        }
      }
    }
  }
}

void conv_backward(const ConvShape& s, const Grid& g, std::span<const double> w,
                   const std::vector<double>& in, const std::vector<double>& out_bar,
                   std::span<double> w_bar, std::span<double> b_bar, std::vector<double>* in_bar) {
  const int ex = g.ex();
  const int ey = g.ey();
  const std::size_t sz = g.extended_size();
  const auto taps = tap_offsets(s);
  if (in_bar) in_bar->assign(sz * s.cin, 0.0);
  for (int o = 0; o < s.cout; ++o) {
    const double* ob = out_bar.data() + sz * o;
    double bsum = 0.0;
    for (std::size_t p = 0; p < sz; ++p) bsum += ob[p];
    b_bar[o] += bsum;
    for (int i = 0; i < s.cin; ++i) {
      const double* src = in.data() + sz * i;
      double* ib = in_bar ? in_bar->data() + sz * i : nullptr;
      for (std::size_t q = 0; q < taps.size(); ++q) {
        const std::size_t wi = (static_cast<std::size_t>(o) * s.cin + i) * taps.size() + q;
        const double wt = w[wi];
        double acc = 0.0;
        for (int m2 = 0; m2 < ey; ++m2) {
          const std::size_t srow = static_cast<std::size_t>(wrap(m2 - taps[q].dy, ey)) * ex;
          const double* orow = ob + static_cast<std::size_t>(m2) * ex;
          for (int m1 = 0; m1 < ex; ++m1) {
            const std::size_t sp = srow + wrap(m1 - taps[q].dx, ex);
            acc += orow[m1] * src[sp];
            if (ib) ib[sp] += wt * orow[m1];
          }
        }
        w_bar[wi] += acc;
      }
    }
  }
}

std::vector<double> frequency_channels(const Grid& g) {
  const std::size_t sz = g.extended_size();
  std::vector<double> ch(sz * kFrequencyChannels, 0.0);
  for (int m2 = 0; m2 < g.ey(); ++m2)
    for (int m1 = 0; m1 < g.ex(); ++m1) {
      const double t1 = lattice_theta(m1, g.ex());
      const double t2 = g.dim == 2 ? lattice_theta(m2, g.ey()) : 0.0;
      const double s1 = std::sin(t1 / 2);
      const double s2 = std::sin(t2 / 2);
      const double denom = 4.0 * (s1 * s1 + s2 * s2);
      const std::size_t p = g.extended_index(m1, m2);
      ch[p] = denom;
      ch[sz + p] = std::cos(t1);
      ch[2 * sz + p] = std::cos(t2);
      ch[3 * sz + p] = std::sin(t1);
      ch[4 * sz + p] = std::sin(t2);
    }
  return ch;
}

std::vector<cplx> meta_lambda_forward(const MetaLambdaShape& s, const Grid& g,
                                      const MetaLambdaParams& p, const std::vector<double>& input) {
  std::vector<double> h;
  conv_forward(s.first(), g, p.w1, p.b1, input, h);
  for (auto& v : h) v = softplus(v);
  std::vector<double> o;
  conv_forward(s.second(), g, p.w2, p.b2, h, o);
  const std::size_t sz = g.extended_size();
  const std::vector<double> rho = rho_channel(s, g, input);
  std::vector<cplx> lambda(sz);
  for (std::size_t q = 0; q < sz; ++q) lambda[q] = rho[q] * cplx(o[q], o[sz + q]);
  return lambda;
}

void meta_lambda_backward(const MetaLambdaShape& s, const Grid& g, const MetaLambdaParams& p,
                          const std::vector<double>& input, const std::vector<cplx>& lambda_bar,
                          MetaLambdaGrads& grads) {
  std::vector<double> pre;
  conv_forward(s.first(), g, p.w1, p.b1, input, pre);
  std::vector<double> h = pre;
  for (auto& v : h) v = softplus(v);
  const std::size_t sz = g.extended_size();
  std::vector<double> o_bar(2 * sz);
  const std::vector<double> rho = rho_channel(s, g, input);
  for (std::size_t q = 0; q < sz; ++q) {
    o_bar[q] = rho[q] * lambda_bar[q].real();
    o_bar[sz + q] = rho[q] * lambda_bar[q].imag();
  }
  std::vector<double> h_bar;
  conv_backward(s.second(), g, p.w2, h, o_bar, grads.w2, grads.b2, &h_bar);
  for (std::size_t q = 0; q < h_bar.size(); ++q)
    h_bar[q] *= sigmoid(pre[q]);
  conv_backward(s.first(), g, p.w1, input, h_bar, grads.w1, grads.b1, nullptr);
}

namespace {

struct MetaTForward {
  std::vector<double> pre1, h1, h2, pooled;
};

MetaTForward meta_t_trunk(const MetaTShape& s, const Grid& g, const MetaTParams& p,
                          const std::vector<double>& input) {
  MetaTForward f;
  conv_forward(s.first(), g, p.w1, p.b1, input, f.pre1);
  f.h1 = f.pre1;
  for (auto& v : f.h1) v = softplus(v);
  conv_forward(s.second(), g, p.w2, p.b2, f.h1, f.h2);
  const std::size_t sz = g.extended_size();
  f.pooled.assign(s.hidden, 0.0);
  for (int c = 0; c < s.hidden; ++c) {
    double acc = 0.0;
    for (std::size_t q = 0; q < sz; ++q) acc += f.h2[sz * c + q];
    f.pooled[c] = acc / static_cast<double>(sz);
  }
  return f;
}

}  // namespace

std::vector<double> meta_t_forward(const MetaTShape& s, const Grid& g, const MetaTParams& p,
                                   const std::vector<double>& input) {
  const MetaTForward f = meta_t_trunk(s, g, p, input);
  std::vector<double> out(p.c.begin(), p.c.end());
  for (int o = 0; o < s.outputs; ++o)
    for (int c = 0; c < s.hidden; ++c) out[o] += p.a[static_cast<std::size_t>(o) * s.hidden + c] * f.pooled[c];
  return out;
}

void meta_t_backward(const MetaTShape& s, const Grid& g, const MetaTParams& p,
                     const std::vector<double>& input, const std::vector<double>& out_bar,
                     MetaTGrads& grads) {
  const MetaTForward f = meta_t_trunk(s, g, p, input);
  std::vector<double> pooled_bar(s.hidden, 0.0);
  for (int o = 0; o < s.outputs; ++o) {
    grads.c[o] += out_bar[o];
    for (int c = 0; c < s.hidden; ++c) {
      grads.a[static_cast<std::size_t>(o) * s.hidden + c] += out_bar[o] * f.pooled[c];
      pooled_bar[c] += p.a[static_cast<std::size_t>(o) * s.hidden + c] * out_bar[o];
    }
  }
  const std::size_t sz = g.extended_size();
  std::vector<double> h2_bar(sz * s.hidden);
  for (int c = 0; c < s.hidden; ++c)
    std::fill(h2_bar.begin() + sz * c, h2_bar.begin() + sz * (c + 1), pooled_bar[c] / static_cast<double>(sz));
  std::vector<double> h1_bar;
  conv_backward(s.second(), g, p.w2, f.h1, h2_bar, grads.w2, grads.b2, &h1_bar);
  for (std::size_t q = 0; q < h1_bar.size(); ++q)
    h1_bar[q] *= sigmoid(f.pre1[q]);
  conv_backward(s.first(), g, p.w1, input, h1_bar, grads.w1, grads.b1, nullptr);
}

std::vector<double> resample_to_lattice(const std::vector<double>& values, int nx, int ny,
                                        const Grid& g) {
  const int ex = g.ex();
  const int ey = g.ey();
  std::vector<double> out(g.extended_size());
  for (int m2 = 0; m2 < ey; ++m2) {
    const int j = std::min(ny - 1, static_cast<int>((m2 + 0.5) * ny / ey));
    for (int m1 = 0; m1 < ex; ++m1) {
      const int i = std::min(nx - 1, static_cast<int>((m1 + 0.5) * nx / ex));
      out[g.extended_index(m1, m2)] = values[static_cast<std::size_t>(j) * nx + i];
    }
  }
  return out;
}

}  // namespace fns
