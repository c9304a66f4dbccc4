#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fns/corrector.hpp"
#include "fns/meta.hpp"

namespace fns {

struct Segment {
  std::string name;
  std::size_t offset = 0;
  std::size_t length = 0;
};

/// Flat real parameters with named, disjoint, covering segments.
struct ParamVector {
  std::vector<double> values;
  std::vector<Segment> segments;

  std::size_t add(const std::string& name, std::size_t length);
  bool has(const std::string& name) const;
  const Segment& segment(const std::string& name) const;
  std::span<double> view(const std::string& name);
  std::span<const double> view(const std::string& name) const;
  std::size_t size() const { return values.size(); }
};

enum class TrainMode { direct, meta };

struct ModelSpec {
  CorrectorVariant variant = CorrectorVariant::diagonal;
  int kernel_size = 5;
  /// Number of C stages; 0 leaves the parts of a region split diagonal.
  int depth = 1;
  /// Fixed prefactor 1 / mean|diag| per corrector (per region for split).
  bool normalize_by_diagonal = true;
  bool mask_input = true;
  TrainMode mode = TrainMode::direct;
  /// Problem-specific meta input channels (frequency channels are added).
  int meta_input_channels = 1;
  int lambda_hidden = 8;
  int lambda_kernel = 1;
  int t_hidden = 8;
  int t_kernel = 3;
};

/// One training tuple: operator, right-hand side b (system A u = b) and
/// meta inputs on the extended lattice (channel-major).
struct TrainItem {
  Stencil9Field a;
  Field b;
  std::vector<double> meta_input;
  RegionMask mask;
};

class Model {
 public:
  Model(ModelSpec spec, Grid grid);

  const ModelSpec& spec() const { return spec_; }
  const Grid& grid() const { return grid_; }

  ParamVector init_params(std::uint64_t seed) const;
  SpectralCorrector build(const ParamVector& p, const TrainItem& item) const;
  /// Adds d(loss)/d(params) given the corrector-parameter gradient.
  void backprop(const ParamVector& p, const TrainItem& item, const CorrectorGrad& g,
                std::span<double> out) const;

 private:
  std::vector<double> full_input(const TrainItem& item) const;
  SpectralCorrector build_single(const ParamVector& p, const std::string& prefix,
                                 const std::vector<double>* input) const;
  void backprop_single(const ParamVector& p, const std::string& prefix,
                       const std::vector<double>* input, const CorrectorGrad& g,
                       std::span<double> out) const;
  MetaLambdaShape lambda_shape() const;
  MetaTShape t_shape() const;

  ModelSpec spec_;
  Grid grid_;
  std::vector<double> freq_channels_;
};

/// Re-samples direct-mode lambda segments onto another grid by bilinear
/// interpolation on the normalised periodic frequency lattice; kernels and
/// meta weights are copied unchanged.
ParamVector transfer_params(const ParamVector& p, const Grid& from, const Grid& to);

struct LossConfig {
  SmootherSpec smoother;
  int K = 1;
};

/// ||b - A u^K|| / ||b|| after K hybrid iterations from zero; accumulates
/// the corrector gradient when grad is non-null.
double item_loss(const Stencil9Field& a, const Field& b, const SpectralCorrector& hc,
                 const LossConfig& cfg, CorrectorGrad* grad);

/// Mean loss over the items; writes the mean gradient when grad is non-null.
/// Items run on up to `threads` workers, gradients reduce in item order.
double batch_loss(const Model& model, const ParamVector& p, std::span<const TrainItem> items,
                  const LossConfig& cfg, std::vector<double>* grad, int threads = 1);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long long t = 0;
};

void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& state,
               double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

struct TrainConfig {
  int K = 1;
  int M = 10;
  double omega = 0.75;
  int batch = 4;
  int epochs = 200;
  double lr = 1e-4;
  int lr_halving_period = 100;
  int k_increase_period = 100;
  int k_max = 1000;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// Schedule for 1-based epoch e.
double scheduled_lr(const TrainConfig& cfg, int epoch);
int scheduled_k(const TrainConfig& cfg, int epoch);

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double lr = 0.0;
  int K = 0;
};

struct TrainResult {
  ParamVector params;
  std::vector<EpochRecord> history;
};

using EpochCallback = std::function<void(const EpochRecord&, const ParamVector&)>;

TrainResult train(const Model& model, std::span<const TrainItem> items, const TrainConfig& cfg,
                  const ParamVector* init = nullptr, const EpochCallback& on_epoch = {});

/// Threads from FNS_THREADS (default 1).
int env_threads();

}  // namespace fns
