#pragma once

#include <span>
#include <vector>

#include "fns/grid_spectral.hpp"

namespace fns {

/// Real multi-channel periodic convolution on the extended lattice.
/// Weights laid out [out][in][tap], tap order as Kernel (x fastest).
struct ConvShape {
  int cin = 1;
  int cout = 1;
  int k = 1;
  int dim = 2;
  std::size_t taps() const { return dim == 2 ? static_cast<std::size_t>(k) * k : static_cast<std::size_t>(k); }
  std::size_t weight_count() const { return static_cast<std::size_t>(cin) * cout * taps(); }
};

/// out[o][m] = b[o] + sum_i sum_q w[o][i][q] in[i][m - q]
void conv_forward(const ConvShape& s, const Grid& g, std::span<const double> w,
                  std::span<const double> b, const std::vector<double>& in, std::vector<double>& out);
/// Accumulates w_bar, b_bar; writes in_bar when non-null.
void conv_backward(const ConvShape& s, const Grid& g, std::span<const double> w,
                   const std::vector<double>& in, const std::vector<double>& out_bar,
                   std::span<double> w_bar, std::span<double> b_bar, std::vector<double>* in_bar);

/// Frequency channels appended to every meta input, all bounded:
/// sum_d 4 sin^2(theta_d / 2), cos theta_1, cos theta_2, sin theta_1,
/// sin theta_2. The sine channels let lambda differ between mirrored bins,
/// which couples sine and cosine content of the residual.
std::vector<double> frequency_channels(const Grid& g);
constexpr int kFrequencyChannels = 5;

/// Meta-lambda: conv -> softplus -> conv to two channels read as (re, im),
/// multiplied by rho = 1 / (first frequency channel), 0 at the origin, so the
/// net learns a bounded ratio to the inverse Laplacian symbol.
struct MetaLambdaShape {
  int in_channels = 6;
  int hidden = 8;
  int k = 1;
  int dim = 2;
  ConvShape first() const { return {in_channels, hidden, k, dim}; }
  ConvShape second() const { return {hidden, 2, k, dim}; }
};

/// Meta-T: conv -> softplus -> conv, global average, affine map to kernel taps
/// (re, im interleaved, all kernels concatenated).
struct MetaTShape {
  int in_channels = 6;
  int hidden = 8;
  int k = 3;
  int dim = 2;
  int outputs = 50;
  ConvShape first() const { return {in_channels, hidden, k, dim}; }
  ConvShape second() const { return {hidden, hidden, k, dim}; }
};

struct MetaLambdaParams {
  std::span<const double> w1, b1, w2, b2;
};
struct MetaLambdaGrads {
  std::span<double> w1, b1, w2, b2;
};
struct MetaTParams {
  std::span<const double> w1, b1, w2, b2, a, c;
};
struct MetaTGrads {
  std::span<double> w1, b1, w2, b2, a, c;
};

/// input: channel-major values on the extended lattice.
std::vector<cplx> meta_lambda_forward(const MetaLambdaShape& s, const Grid& g,
                                      const MetaLambdaParams& p, const std::vector<double>& input);
void meta_lambda_backward(const MetaLambdaShape& s, const Grid& g, const MetaLambdaParams& p,
                          const std::vector<double>& input, const std::vector<cplx>& lambda_bar,
                          MetaLambdaGrads& grads);

std::vector<double> meta_t_forward(const MetaTShape& s, const Grid& g, const MetaTParams& p,
                                   const std::vector<double>& input);
void meta_t_backward(const MetaTShape& s, const Grid& g, const MetaTParams& p,
                     const std::vector<double>& input, const std::vector<double>& out_bar,
                     MetaTGrads& grads);

/// Nearest-neighbour resampling of a row-major field of size nx x ny onto
/// the extended lattice of g.
std::vector<double> resample_to_lattice(const std::vector<double>& values, int nx, int ny,
                                        const Grid& g);

}  // namespace fns
