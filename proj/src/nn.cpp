#include "lamaml/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lamaml {

namespace {

bool all_finite(std::span<const double> xs) {
  for (double x : xs) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": size mismatch (" + std::to_string(a) +
                     " vs " + std::to_string(b) + ")");
  }
}

// logits = W*in + b for one layer; ReLU applied by the caller where needed.
void affine(const double* w, const double* b, std::span<const double> in, std::vector<double>& out,
            std::size_t n_out) {
  out.resize(n_out);
  const std::size_t n_in = in.size();
  for (std::size_t o = 0; o < n_out; ++o) {
    const double* row = w + o * n_in;
    double acc = b[o];
    for (std::size_t i = 0; i < n_in; ++i) acc += row[i] * in[i];
    out[o] = acc;
  }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape_, std::vector<double> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
  std::size_t n = 1;
  for (std::size_t s : shape) n *= s;
  if (n != data.size()) {
    throw ShapeError("Tensor: shape product " + std::to_string(n) + " != data length " +
                     std::to_string(data.size()));
  }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape_) {
  std::size_t n = 1;
  for (std::size_t s : shape_) n *= s;
  return Tensor(std::move(shape_), std::vector<double>(n, 0.0));
}

double dot(const ParamVector& a, const ParamVector& b) {
  require_same_size(a.size(), b.size(), "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double l2_norm(const ParamVector& a) { return std::sqrt(dot(a, a)); }

ParamVector add(const ParamVector& a, const ParamVector& b) {
  require_same_size(a.size(), b.size(), "add");
  ParamVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

ParamVector scale(const ParamVector& a, double s) {
  ParamVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
  return out;
}

ParamVector hadamard(const ParamVector& a, const ParamVector& b) {
  require_same_size(a.size(), b.size(), "hadamard");
  ParamVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

void axpy(ParamVector& y, double a, const ParamVector& x) {
  require_same_size(y.size(), x.size(), "axpy");
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

Network::Network(std::vector<std::size_t> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 3) {
    throw ShapeError("Network: need at least one hidden layer");
  }
  for (std::size_t s : sizes_) {
    if (s == 0) throw ShapeError("Network: zero-sized layer");
  }
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    w_off_.push_back(off);
    off += sizes_[l] * sizes_[l + 1];
    b_off_.push_back(off);
    off += sizes_[l + 1];
  }
  param_count_ = off;
}

ParamVector Network::init_params(Rng& rng) const {
  ParamVector p(param_count_);
  for (std::size_t l = 0; l < depth(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
    const std::size_t nw = sizes_[l] * sizes_[l + 1];
    for (std::size_t i = 0; i < nw; ++i) p[w_off_[l] + i] = rng.uniform(-bound, bound);
    // biases stay zero
  }
  return p;
}

std::pair<Tensor, ForwardCache> forward(const Network& net, const ParamVector& params,
                                        const Tensor& x) {
  if (x.size() != net.input_size()) {
    throw ShapeError("forward: input length " + std::to_string(x.size()) +
                     " != input layer size " + std::to_string(net.input_size()));
  }
  require_same_size(params.size(), net.param_count(), "forward params");
  if (!all_finite(x.data)) throw NumericError("forward: non-finite input");

  ForwardCache cache;
  cache.pre.resize(net.depth());
  cache.act.resize(net.depth() + 1);
  cache.act[0] = x.data;

  for (std::size_t l = 0; l < net.depth(); ++l) {
    const std::size_t n_out = net.layer_sizes()[l + 1];
    affine(&params.v[net.weight_offset(l)], &params.v[net.bias_offset(l)], cache.act[l],
           cache.pre[l], n_out);
    if (l + 1 < net.depth()) {
      cache.act[l + 1].resize(n_out);
      for (std::size_t o = 0; o < n_out; ++o) cache.act[l + 1][o] = std::max(0.0, cache.pre[l][o]);
    } else {
      cache.act[l + 1] = cache.pre[l];  // linear head
    }
  }
  if (!all_finite(cache.act.back())) throw NumericError("forward: non-finite logits");
  return {Tensor({net.output_size()}, cache.act.back()), std::move(cache)};
}

std::vector<double> softmax(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    z += p[i];
  }
  for (double& q : p) q /= z;
  return p;
}

double loss_xent(const Tensor& logits, std::size_t label) {
  if (label >= logits.size()) {
    throw ShapeError("loss_xent: label " + std::to_string(label) + " out of range for " +
                     std::to_string(logits.size()) + " classes");
  }
  const double m = *std::max_element(logits.data.begin(), logits.data.end());
  double z = 0.0;
  for (double l : logits.data) z += std::exp(l - m);
  return m + std::log(z) - logits[label];
}

namespace {

// Backprop for one example; accumulates weight * d(loss)/d(params) into
// `into`, given a cache from forward(). Returns this example's loss.
double backprop_accumulate(const Network& net, const ParamVector& params, const ForwardCache& cache,
                           std::size_t label, double weight, ParamVector& into,
                           std::vector<double>& delta, std::vector<double>& delta_prev) {
  const std::size_t L = net.depth();
  if (cache.act.size() != L + 1 || cache.pre.size() != L || cache.act[0].size() != net.input_size()) {
    throw ShapeError("backward: cache does not match network");
  }
  require_same_size(into.size(), net.param_count(), "backward grad");

  const auto& logits = cache.act[L];
  const double loss = loss_xent(Tensor({logits.size()}, logits), label);

  // dL/dlogits = softmax - onehot
  delta = softmax(logits);
  delta[label] -= 1.0;

  for (std::size_t l = L; l-- > 0;) {
    const std::size_t n_out = net.layer_sizes()[l + 1];
    const std::size_t n_in = net.layer_sizes()[l];
    const auto& in_act = cache.act[l];
    double* gw = &into.v[net.weight_offset(l)];
    double* gb = &into.v[net.bias_offset(l)];
    const double* w = &params.v[net.weight_offset(l)];

    if (l > 0) {
      delta_prev.assign(n_in, 0.0);
    }
    for (std::size_t o = 0; o < n_out; ++o) {
      const double d = weight * delta[o];
      double* gw_row = gw + o * n_in;
      for (std::size_t i = 0; i < n_in; ++i) gw_row[i] += d * in_act[i];
      gb[o] += d;
      if (l > 0) {
        const double du = delta[o];  // unweighted for propagation
        const double* w_row = w + o * n_in;
        for (std::size_t i = 0; i < n_in; ++i) delta_prev[i] += du * w_row[i];
      }
    }
    if (l > 0) {
      // ReLU subgradient: 0 at pre-activation 0
      for (std::size_t i = 0; i < n_in; ++i) {
        delta_prev[i] = cache.pre[l - 1][i] > 0.0 ? delta_prev[i] : 0.0;
      }
      std::swap(delta, delta_prev);
    }
  }
  return loss;
}

}  // namespace

ParamVector backward(const Network& net, const ParamVector& params, const ForwardCache& cache,
                     std::size_t label) {
  ParamVector grad(net.param_count());
  std::vector<double> delta, delta_prev;
  backprop_accumulate(net, params, cache, label, 1.0, grad, delta, delta_prev);
  return grad;
}

ParamVector finite_diff_grad(const std::function<double(const ParamVector&)>& lossfn,
                             const ParamVector& params, double eps) {
  if (!(eps > 0.0)) throw ShapeError("finite_diff_grad: eps must be positive");
  ParamVector grad(params.size());
  ParamVector p = params;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double orig = p[i];
    p.v[i] = orig + eps;
    const double up = lossfn(p);
    p.v[i] = orig - eps;
    const double down = lossfn(p);
    p.v[i] = orig;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_diff_grad: non-finite loss evaluation");
    }
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

ParamVector sgd_step(const ParamVector& params, const ParamVector& grad, double lr) {
  require_same_size(params.size(), grad.size(), "sgd_step");
  ParamVector out(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) out[i] = params[i] - lr * grad[i];
  return out;
}

ParamVector sgd_step(const ParamVector& params, const ParamVector& grad, const ParamVector& lr) {
  require_same_size(params.size(), grad.size(), "sgd_step");
  require_same_size(params.size(), lr.size(), "sgd_step lr");
  ParamVector out(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) out[i] = params[i] - lr[i] * grad[i];
  return out;
}

ParamVector clip_grad_norm(const ParamVector& grad, double max_norm) {
  if (!(max_norm > 0.0)) throw ShapeError("clip_grad_norm: max_norm must be positive");
  const double norm = l2_norm(grad);
  if (!std::isfinite(norm)) throw NumericError("clip_grad_norm: non-finite gradient");
  if (norm <= max_norm) return grad;
  return scale(grad, max_norm / norm);
}

double batch_loss(const Network& net, const ParamVector& params, std::span<const Example> batch) {
  double total = 0.0;
  for (const Example& e : batch) {
    auto [logits, cache] = forward(net, params, Tensor({e.x.size()}, e.x));
    total += loss_xent(logits, static_cast<std::size_t>(e.y));
  }
  return batch.empty() ? 0.0 : total / static_cast<double>(batch.size());
}

double accumulate_batch_grad(const Network& net, const ParamVector& params,
                             std::span<const Example> batch, double weight, ParamVector& into) {
  if (batch.empty()) return 0.0;
  const double w = weight / static_cast<double>(batch.size());
  double total = 0.0;
  std::vector<double> delta, delta_prev;
  for (const Example& e : batch) {
    auto [logits, cache] = forward(net, params, Tensor({e.x.size()}, e.x));
    total += backprop_accumulate(net, params, cache, static_cast<std::size_t>(e.y), w, into, delta,
                                 delta_prev);
  }
  return total / static_cast<double>(batch.size());
}

std::pair<double, ParamVector> batch_loss_grad(const Network& net, const ParamVector& params,
                                               std::span<const Example> batch) {
  ParamVector grad(net.param_count());
  const double loss = accumulate_batch_grad(net, params, batch, 1.0, grad);
  return {loss, std::move(grad)};
}

double accuracy(const Network& net, const ParamVector& params, std::span<const Example> examples) {
  if (examples.empty()) return 0.0;
  std::size_t hits = 0;
  for (const Example& e : examples) {
    auto [logits, cache] = forward(net, params, Tensor({e.x.size()}, e.x));
    const auto it = std::max_element(logits.data.begin(), logits.data.end());
    if (static_cast<std::int32_t>(it - logits.data.begin()) == e.y) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(examples.size());
}

}  // namespace lamaml
