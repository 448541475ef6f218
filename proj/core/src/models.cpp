#include "smoothfbo/models.hpp"

#include <cmath>

#include "smoothfbo/errors.hpp"

namespace smoothfbo {

Mlp::Mlp(MlpShape shape, Vec64 params)
    : shape_(std::move(shape)), params_(std::move(params)) {
  shape_.validate();
  require_size(params_, shape_.param_count(), "Mlp params");
  out_.assign(static_cast<std::size_t>(shape_.output_dim()), 0.0);
}

void Mlp::set_params(Vec64 p) {
  require_size(p, shape_.param_count(), "Mlp::set_params");
  params_ = std::move(p);
  has_forward_ = false;
}

Vec64 Mlp::predict(const Vec64& x) const {
  return mlp_forward(shape_, params_, x, nullptr);
}

const Vec64& Mlp::forward(const Vec64& x) {
  require_size(x, static_cast<std::size_t>(shape_.input_dim()), "Mlp input");
  mlp_forward_core<double>(shape_, params_.data(), x.data(), &cache_,
                           out_.data());
  has_forward_ = true;
  return out_;
}

void Mlp::backward(const Vec64& out_grad, double scale,
                   Vec64& grad_accum) const {
  if (!has_forward_) throw Error("Mlp::backward without forward");
  require_size(out_grad, static_cast<std::size_t>(shape_.output_dim()),
               "Mlp out_grad");
  require_size(grad_accum, shape_.param_count(), "Mlp grad accumulator");
  mlp_backward_core<double>(shape_, params_.data(), cache_, out_grad.data(),
                            scale, grad_accum.data());
}

std::unique_ptr<Model> Mlp::clone() const {
  return std::make_unique<Mlp>(shape_, params_);
}

LinearModel::LinearModel(Mat64 feature, bool constant_feature)
    : feature_(std::move(feature)), constant_feature_(constant_feature) {
  if (feature_.rows == 0 || feature_.cols == 0) {
    throw ShapeError("LinearModel: empty feature map");
  }
  theta_.assign(feature_dim(), 0.0);
  out_.assign(1, 0.0);
}

Vec64 LinearModel::features(const Vec64& x) const {
  Vec64 phi = matvec(feature_, x);
  if (constant_feature_) phi.push_back(1.0);
  return phi;
}

void LinearModel::set_params(Vec64 p) {
  require_size(p, feature_dim(), "LinearModel::set_params");
  theta_ = std::move(p);
  has_forward_ = false;
}

Vec64 LinearModel::predict(const Vec64& x) const {
  return Vec64{dot(theta_, features(x))};
}

const Vec64& LinearModel::forward(const Vec64& x) {
  phi_cache_ = features(x);
  out_[0] = dot(theta_, phi_cache_);
  has_forward_ = true;
  return out_;
}

void LinearModel::backward(const Vec64& out_grad, double scale,
                           Vec64& grad_accum) const {
  if (!has_forward_) throw Error("LinearModel::backward without forward");
  require_size(out_grad, 1, "LinearModel out_grad");
  require_size(grad_accum, theta_.size(), "LinearModel grad accumulator");
  axpy_inplace(grad_accum, scale * out_grad[0], phi_cache_);
}

std::unique_ptr<Model> LinearModel::clone() const {
  auto copy = std::make_unique<LinearModel>(feature_, constant_feature_);
  copy->theta_ = theta_;
  return copy;
}

Mlp init_network(const InitSpec& spec, std::vector<int> dims,
                 Activation hidden_activation, const Rng& parent) {
  MlpShape shape{std::move(dims), hidden_activation};
  shape.validate();
  Vec64 params(shape.param_count(), 0.0);
  Rng rng = parent.fork(spec.seed_label);
  switch (spec.scheme) {
    case InitSpec::Scheme::kZeros:
      break;
    case InitSpec::Scheme::kGaussian:
      for (double& p : params) p = rng.gaussian(0.0, spec.stddev);
      break;
    case InitSpec::Scheme::kFanInGaussian:
      for (int l = 0; l < shape.layer_count(); ++l) {
        const int in = shape.dims[l];
        const int on = shape.dims[l + 1];
        const double std_l = 1.0 / std::sqrt(static_cast<double>(in));
        double* block = params.data() + shape.layer_offset(l);
        for (int i = 0; i < on * in; ++i) block[i] = rng.gaussian(0.0, std_l);
        // biases (the tail of the block) stay zero
      }
      break;
  }
  return Mlp(std::move(shape), std::move(params));
}

void sgd_step(Model& model, const Vec64& grad, double lr) {
  require_size(grad, model.param_count(), "sgd_step grad");
  if (!all_finite(grad)) {
    throw NonFiniteError("sgd_step: gradient contains inf/nan");
  }
  Vec64 p = model.params();
  axpy_inplace(p, -lr, grad);
  model.set_params(std::move(p));
}

OptKind opt_kind_from_string(const std::string& name) {
  if (name == "sgd") return OptKind::kSgd;
  if (name == "adam") return OptKind::kAdam;
  throw Error("unknown optimizer '" + name + "' (want sgd|adam)");
}

std::string to_string(OptKind kind) {
  return kind == OptKind::kSgd ? "sgd" : "adam";
}

void Stepper::step(Vec64& params, const Vec64& grad) {
  require_same_size(params, grad, "Stepper::step");
  if (!all_finite(grad)) {
    throw NonFiniteError("Stepper::step: gradient contains inf/nan");
  }
  if (kind_ == OptKind::kSgd) {
    axpy_inplace(params, -lr_, grad);
    return;
  }
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  if (m_.size() != params.size()) {
    m_.assign(params.size(), 0.0);
    v_.assign(params.size(), 0.0);
    t_ = 0;
  }
  ++t_;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grad[i];
    v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grad[i] * grad[i];
    const double mhat = m_[i] / c1;
    const double vhat = v_[i] / c2;
    params[i] -= lr_ * mhat / (std::sqrt(vhat) + kEps);
  }
}

void Stepper::reset() {
  m_.clear();
  v_.clear();
  t_ = 0;
}

}  // namespace smoothfbo
