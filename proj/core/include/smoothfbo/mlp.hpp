#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "smoothfbo/dense.hpp"
#include "smoothfbo/errors.hpp"

namespace smoothfbo {

enum class Activation { kGelu, kIdentity };

// Fully-connected network shape. Parameters live in one flat vector with the
// frozen layout: for each layer l (input dims[l] -> output dims[l+1]), the
// weight matrix row-major (dims[l+1] x dims[l]) followed by the bias
// (dims[l+1]). Hidden layers apply `hidden_activation`; the output layer is
// always affine.
struct MlpShape {
  std::vector<int> dims;
  Activation hidden_activation = Activation::kGelu;

  int layer_count() const { return static_cast<int>(dims.size()) - 1; }
  int input_dim() const { return dims.front(); }
  int output_dim() const { return dims.back(); }
  std::size_t param_count() const;
  std::size_t layer_offset(int layer) const;
  void validate() const;

  bool operator==(const MlpShape&) const = default;
};

// GeLU, tanh form: 0.5 u (1 + tanh(sqrt(2/pi) (u + 0.044715 u^3))).
// The derivative below differentiates this same expression, not the exact
// Gaussian CDF form, so finite differences of gelu() match gelu_grad() to
// machine-level accuracy.
template <class T>
T gelu(const T& u) {
  using std::tanh;
  const double c = 0.7978845608028654;  // sqrt(2/pi)
  const T u3 = u * u * u;
  return 0.5 * u * (1.0 + tanh(c * (u + 0.044715 * u3)));
}

template <class T>
T gelu_grad(const T& u) {
  using std::tanh;
  const double c = 0.7978845608028654;
  const T inner = c * (u + 0.044715 * (u * u * u));
  const T t = tanh(inner);
  const T sech2 = 1.0 - t * t;
  const T dinner = c * (1.0 + 3.0 * 0.044715 * (u * u));
  return 0.5 * (1.0 + t) + 0.5 * u * sech2 * dinner;
}

// Per-layer forward state: pre[l] holds layer l's affine output, act[l] the
// post-activation input to layer l (act[0] is the network input). delta and
// delta_prev are backward-pass scratch. Reusing one cache across calls keeps
// the hot loops allocation-free after warmup.
template <class T>
struct ForwardCache {
  std::vector<std::vector<T>> pre;
  std::vector<std::vector<T>> act;
  std::vector<T> delta;
  std::vector<T> delta_prev;
};

// out = network(x); fills `cache` (when non-null) for a later backward pass.
// Works for any scalar T with +,*,tanh (double, Dual).
template <class T>
void mlp_forward_core(const MlpShape& shape, const T* params, const T* x,
                      ForwardCache<T>* cache, T* out) {
  const int layers = shape.layer_count();
  ForwardCache<T> local;
  ForwardCache<T>& cc = cache ? *cache : local;
  cc.pre.resize(static_cast<std::size_t>(layers));
  cc.act.resize(static_cast<std::size_t>(layers) + 1);
  cc.act[0].assign(x, x + shape.input_dim());
  std::size_t off = 0;
  for (int l = 0; l < layers; ++l) {
    const int in = shape.dims[l];
    const int on = shape.dims[l + 1];
    const std::vector<T>& a_prev = cc.act[static_cast<std::size_t>(l)];
    std::vector<T>& z = cc.pre[static_cast<std::size_t>(l)];
    z.assign(static_cast<std::size_t>(on), T(0.0));
    for (int r = 0; r < on; ++r) {
      T s = params[off + static_cast<std::size_t>(on) * in + r];  // bias
      const T* wrow = params + off + static_cast<std::size_t>(r) * in;
      for (int c = 0; c < in; ++c) s += wrow[c] * a_prev[c];
      z[r] = s;
    }
    std::vector<T>& a = cc.act[static_cast<std::size_t>(l) + 1];
    a = z;
    if (l + 1 < layers && shape.hidden_activation == Activation::kGelu) {
      for (T& v : a) v = gelu(v);
    }
    off += static_cast<std::size_t>(on) * (in + 1);
  }
  const std::vector<T>& last = cc.act[static_cast<std::size_t>(layers)];
  for (int i = 0; i < shape.output_dim(); ++i) out[i] = last[i];
}

// Accumulates d(scale * <out_grad, network(x)>)/d(params) into grad_accum,
// reading the forward state from `cache`. grad_accum must hold
// shape.param_count() entries and is added to, never overwritten.
template <class T>
void mlp_backward_core(const MlpShape& shape, const T* params,
                       ForwardCache<T>& cache, const T* out_grad,
                       const T& scale, T* grad_accum) {
  const int layers = shape.layer_count();
  std::vector<T>& delta = cache.delta;
  std::vector<T>& delta_prev = cache.delta_prev;
  delta.assign(out_grad, out_grad + shape.output_dim());
  for (T& d : delta) d = d * scale;
  for (int l = layers - 1; l >= 0; --l) {
    const int in = shape.dims[l];
    const int on = shape.dims[l + 1];
    const std::size_t off = shape.layer_offset(l);
    const std::vector<T>& a_prev = cache.act[static_cast<std::size_t>(l)];
    for (int r = 0; r < on; ++r) {
      T* grow = grad_accum + off + static_cast<std::size_t>(r) * in;
      for (int c = 0; c < in; ++c) grow[c] += delta[r] * a_prev[c];
      grad_accum[off + static_cast<std::size_t>(on) * in + r] += delta[r];
    }
    if (l == 0) break;
    delta_prev.assign(static_cast<std::size_t>(in), T(0.0));
    for (int r = 0; r < on; ++r) {
      const T* wrow = params + off + static_cast<std::size_t>(r) * in;
      for (int c = 0; c < in; ++c) delta_prev[c] += wrow[c] * delta[r];
    }
    if (shape.hidden_activation == Activation::kGelu) {
      const std::vector<T>& z = cache.pre[static_cast<std::size_t>(l) - 1];
      for (int c = 0; c < in; ++c) {
        delta_prev[c] = delta_prev[c] * gelu_grad(z[c]);
      }
    }
    delta.swap(delta_prev);
  }
}

// Double-precision tape pairing a forward activation cache with a flat
// gradient accumulator aligned to the parameter layout. Backward passes add
// into the accumulator; reset() zeroes it and invalidates the cache.
class GradTape {
 public:
  explicit GradTape(const MlpShape& shape);

  void reset();
  const Vec64& grad() const { return grad_; }
  bool has_forward() const { return has_forward_; }
  const MlpShape& shape() const { return shape_; }

 private:
  friend Vec64 mlp_forward(const MlpShape&, const Vec64&, const Vec64&, GradTape*);
  friend const Vec64& mlp_backward(const MlpShape&, const Vec64&, GradTape&,
                                   const Vec64&, double);
  MlpShape shape_;
  ForwardCache<double> cache_;
  Vec64 grad_;
  bool has_forward_ = false;
};

// Forward pass; records activations into `tape` when provided.
Vec64 mlp_forward(const MlpShape& shape, const Vec64& params, const Vec64& x,
                  GradTape* tape = nullptr);

// Accumulates scale * d<out_grad, h(x)>/d(params) into the tape (using the
// tape's most recent forward activations) and returns the accumulator.
// Throws Error if the tape has no recorded forward or was built for a
// different shape.
const Vec64& mlp_backward(const MlpShape& shape, const Vec64& params,
                          GradTape& tape, const Vec64& out_grad,
                          double scale = 1.0);

}  // namespace smoothfbo
