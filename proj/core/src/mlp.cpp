#include "smoothfbo/mlp.hpp"

#include <string>

namespace smoothfbo {

void MlpShape::validate() const {
  if (dims.size() < 2) {
    throw ShapeError("MlpShape: need at least input and output dims");
  }
  for (int d : dims) {
    if (d < 1) throw ShapeError("MlpShape: every layer dim must be >= 1");
  }
}

std::size_t MlpShape::param_count() const {
  std::size_t n = 0;
  for (int l = 0; l + 1 < static_cast<int>(dims.size()); ++l) {
    n += static_cast<std::size_t>(dims[l + 1]) * (dims[l] + 1);
  }
  return n;
}

std::size_t MlpShape::layer_offset(int layer) const {
  std::size_t off = 0;
  for (int l = 0; l < layer; ++l) {
    off += static_cast<std::size_t>(dims[l + 1]) * (dims[l] + 1);
  }
  return off;
}

GradTape::GradTape(const MlpShape& shape)
    : shape_(shape), grad_(shape.param_count(), 0.0) {
  shape_.validate();
}

void GradTape::reset() {
  std::fill(grad_.begin(), grad_.end(), 0.0);
  has_forward_ = false;
  cache_.pre.clear();
  cache_.act.clear();
}

Vec64 mlp_forward(const MlpShape& shape, const Vec64& params, const Vec64& x,
                  GradTape* tape) {
  shape.validate();
  require_size(params, shape.param_count(), "mlp_forward params");
  require_size(x, static_cast<std::size_t>(shape.input_dim()), "mlp_forward input");
  if (tape && !(tape->shape() == shape)) {
    throw ShapeError("mlp_forward: tape was built for a different shape");
  }
  Vec64 out(static_cast<std::size_t>(shape.output_dim()), 0.0);
  mlp_forward_core<double>(shape, params.data(), x.data(),
                           tape ? &tape->cache_ : nullptr, out.data());
  if (tape) tape->has_forward_ = true;
  return out;
}

const Vec64& mlp_backward(const MlpShape& shape, const Vec64& params,
                          GradTape& tape, const Vec64& out_grad, double scale) {
  if (!(tape.shape() == shape)) {
    throw ShapeError("mlp_backward: tape was built for a different shape");
  }
  if (!tape.has_forward()) {
    throw Error("mlp_backward: tape has no recorded forward pass");
  }
  require_size(params, shape.param_count(), "mlp_backward params");
  require_size(out_grad, static_cast<std::size_t>(shape.output_dim()),
               "mlp_backward out_grad");
  mlp_backward_core<double>(shape, params.data(), tape.cache_, out_grad.data(),
                            scale, tape.grad_.data());
  return tape.grad_;
}

}  // namespace smoothfbo
