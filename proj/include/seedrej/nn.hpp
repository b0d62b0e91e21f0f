#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "seedrej/rng.hpp"

namespace seedrej::nn {

struct Layer {
  std::size_t in = 0, out = 0;
  std::vector<double> w;  // out*in, row-major: w[o*in + i]
  std::vector<double> b;  // out

  Layer() = default;
  Layer(std::size_t in_, std::size_t out_) : in(in_), out(out_), w(in_ * out_, 0.0), b(out_, 0.0) {}
};

inline void init_glorot(Layer& l, Rng& rng) {
  double stddev = std::sqrt(2.0 / static_cast<double>(l.in + l.out));
  for (double& v : l.w) v = rng.normal(0.0, stddev);
  for (double& v : l.b) v = 0.0;
}

struct LayerGrads {
  std::vector<double> dw, db;

  explicit LayerGrads(const Layer& l) : dw(l.w.size(), 0.0), db(l.b.size(), 0.0) {}
  void zero() {
    std::fill(dw.begin(), dw.end(), 0.0);
    std::fill(db.begin(), db.end(), 0.0);
  }
};

inline void affine_forward(const Layer& l, std::span<const double> x, std::vector<double>& y) {
  if (x.size() != l.in) throw std::invalid_argument("affine_forward: input width mismatch");
  y.assign(l.out, 0.0);
  for (std::size_t o = 0; o < l.out; ++o) {
    double s = l.b[o];
    const double* wr = l.w.data() + o * l.in;
    for (std::size_t i = 0; i < l.in; ++i) s += wr[i] * x[i];
    y[o] = s;
  }
}

// Accumulates dW/db into grads and writes the input gradient into dx.
inline void affine_backward(const Layer& l, std::span<const double> x, std::span<const double> dy,
                            LayerGrads& grads, std::vector<double>& dx) {
  dx.assign(l.in, 0.0);
  for (std::size_t o = 0; o < l.out; ++o) {
    double g = dy[o];
    grads.db[o] += g;
    double* dwr = grads.dw.data() + o * l.in;
    const double* wr = l.w.data() + o * l.in;
    for (std::size_t i = 0; i < l.in; ++i) {
      dwr[i] += g * x[i];
      dx[i] += wr[i] * g;
    }
  }
}

inline void relu_inplace(std::vector<double>& v) {
  for (double& x : v)
    if (x < 0.0) x = 0.0;
}

// dx *= 1[pre > 0]
inline void relu_backward_inplace(std::span<const double> pre, std::vector<double>& dx) {
  for (std::size_t i = 0; i < dx.size(); ++i)
    if (pre[i] <= 0.0) dx[i] = 0.0;
}

inline double log_sum_exp(std::span<const double> v) {
  double mx = v[0];
  for (double x : v) mx = std::max(mx, x);
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

inline std::vector<double> softmax(std::span<const double> logits) {
  double mx = logits[0];
  for (double x : logits) mx = std::max(mx, x);
  std::vector<double> p(logits.size());
  double s = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    s += p[i];
  }
  for (double& x : p) x /= s;
  return p;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Numerically stable binary cross-entropy from the logit; label in {0, 1}.
inline double bce_with_logit(double z, double label) {
  return std::max(z, 0.0) - z * label + std::log1p(std::exp(-std::abs(z)));
}

// Forward pass through ReLU trunk layers; cache[i] is the input of layer i,
// cache.back() the trunk output. pre[i] holds pre-activation values of layer i.
struct TrunkCache {
  std::vector<std::vector<double>> inputs;  // per layer
  std::vector<std::vector<double>> pre;     // per layer, before ReLU
  std::vector<double> output;
};

inline void trunk_forward(std::span<const Layer> trunk, std::span<const double> x,
                          TrunkCache& cache) {
  cache.inputs.resize(trunk.size());
  cache.pre.resize(trunk.size());
  std::vector<double> cur(x.begin(), x.end());
  for (std::size_t i = 0; i < trunk.size(); ++i) {
    cache.inputs[i] = cur;
    affine_forward(trunk[i], cur, cache.pre[i]);
    cur = cache.pre[i];
    relu_inplace(cur);
  }
  cache.output = std::move(cur);
}

// Backward through the trunk given the gradient at its output.
inline void trunk_backward(std::span<const Layer> trunk, const TrunkCache& cache,
                           std::vector<double> d_out, std::span<LayerGrads> grads) {
  std::vector<double> dx;
  for (std::size_t i = trunk.size(); i > 0; --i) {
    std::size_t li = i - 1;
    relu_backward_inplace(cache.pre[li], d_out);
    affine_backward(trunk[li], cache.inputs[li], d_out, grads[li], dx);
    d_out = std::move(dx);
  }
}

// Optimizers. SGD is the default; Adam is the optional adaptive variant.
enum class Optimizer { sgd, adam };

struct AdamLayerState {
  std::vector<double> mw, vw, mb, vb;
  explicit AdamLayerState(const Layer& l)
      : mw(l.w.size(), 0.0), vw(l.w.size(), 0.0), mb(l.b.size(), 0.0), vb(l.b.size(), 0.0) {}
};

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

inline void sgd_step(Layer& l, const LayerGrads& g, double lr) {
  for (std::size_t i = 0; i < l.w.size(); ++i) l.w[i] -= lr * g.dw[i];
  for (std::size_t i = 0; i < l.b.size(); ++i) l.b[i] -= lr * g.db[i];
}

inline void adam_step(Layer& l, const LayerGrads& g, AdamLayerState& st, double lr,
                      std::size_t t, const AdamParams& p = {}) {
  double bc1 = 1.0 - std::pow(p.beta1, static_cast<double>(t));
  double bc2 = 1.0 - std::pow(p.beta2, static_cast<double>(t));
  auto update = [&](std::vector<double>& theta, const std::vector<double>& grad,
                    std::vector<double>& m, std::vector<double>& v) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = p.beta1 * m[i] + (1.0 - p.beta1) * grad[i];
      v[i] = p.beta2 * v[i] + (1.0 - p.beta2) * grad[i] * grad[i];
      theta[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + p.eps);
    }
  };
  update(l.w, g.dw, st.mw, st.vw);
  update(l.b, g.db, st.mb, st.vb);
}

}  // namespace seedrej::nn
