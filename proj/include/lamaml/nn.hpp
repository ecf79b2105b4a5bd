#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "lamaml/errors.hpp"
#include "lamaml/example.hpp"
#include "lamaml/rng.hpp"

namespace lamaml {

// Dense row-major tensor of 64-bit floats.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<std::size_t> shape_, std::vector<double> data_);

  static Tensor zeros(std::vector<std::size_t> shape_);
  std::size_t size() const { return data.size(); }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
};

// Flat vector over all weights and biases of a Network. The same shape
// carries gradients and per-parameter learning rates.
struct ParamVector {
  std::vector<double> v;

  ParamVector() = default;
  explicit ParamVector(std::size_t n, double fill = 0.0) : v(n, fill) {}
  explicit ParamVector(std::vector<double> values) : v(std::move(values)) {}

  std::size_t size() const { return v.size(); }
  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }
  bool operator==(const ParamVector& o) const { return v == o.v; }
};

double dot(const ParamVector& a, const ParamVector& b);
double l2_norm(const ParamVector& a);
ParamVector add(const ParamVector& a, const ParamVector& b);
ParamVector scale(const ParamVector& a, double s);
ParamVector hadamard(const ParamVector& a, const ParamVector& b);
// y += a * x
void axpy(ParamVector& y, double a, const ParamVector& x);

// MLP topology: ReLU hidden layers, linear output head over all classes.
// Parameter layout per layer l: weight matrix [out x in] row-major, then bias.
class Network {
 public:
  explicit Network(std::vector<std::size_t> layer_sizes);

  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  std::size_t depth() const { return sizes_.size() - 1; }  // number of linear layers
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  std::size_t param_count() const { return param_count_; }
  std::size_t weight_offset(std::size_t layer) const { return w_off_[layer]; }
  std::size_t bias_offset(std::size_t layer) const { return b_off_[layer]; }

  // Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per layer, biases zero.
  ParamVector init_params(Rng& rng) const;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> w_off_, b_off_;
  std::size_t param_count_ = 0;
};

// Per-layer pre-activations and activations of one forward pass.
// act[0] is the input; act.size() == depth() + 1, pre.size() == depth().
struct ForwardCache {
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> act;
};

std::pair<Tensor, ForwardCache> forward(const Network& net, const ParamVector& params,
                                        const Tensor& x);

std::vector<double> softmax(std::span<const double> logits);

// -log softmax(logits)[label], stabilized by max-subtraction.
double loss_xent(const Tensor& logits, std::size_t label);

// Exact gradient of loss_xent(forward(net, params, x), label) w.r.t. params.
ParamVector backward(const Network& net, const ParamVector& params, const ForwardCache& cache,
                     std::size_t label);

// Central differences (f(p+eps*e_i) - f(p-eps*e_i)) / (2 eps) per coordinate.
ParamVector finite_diff_grad(const std::function<double(const ParamVector&)>& lossfn,
                             const ParamVector& params, double eps);

ParamVector sgd_step(const ParamVector& params, const ParamVector& grad, double lr);
ParamVector sgd_step(const ParamVector& params, const ParamVector& grad, const ParamVector& lr);

// Rescale to L2 norm max_norm when above it; throws NumericError on a
// non-finite norm so NaN/Inf never propagates silently into an update.
ParamVector clip_grad_norm(const ParamVector& grad, double max_norm);

// Batched evaluation (mean reduction over the batch).
double batch_loss(const Network& net, const ParamVector& params, std::span<const Example> batch);
std::pair<double, ParamVector> batch_loss_grad(const Network& net, const ParamVector& params,
                                               std::span<const Example> batch);
// Accumulates the mean-loss gradient into `into` (scaled by `weight`);
// returns the mean loss. Reuses allocations across calls via `into`.
double accumulate_batch_grad(const Network& net, const ParamVector& params,
                             std::span<const Example> batch, double weight, ParamVector& into);
double accuracy(const Network& net, const ParamVector& params, std::span<const Example> examples);

}  // namespace lamaml
