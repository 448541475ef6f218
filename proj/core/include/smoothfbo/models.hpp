#pragma once

#include <memory>
#include <string>
#include <vector>

#include "smoothfbo/dense.hpp"
#include "smoothfbo/mlp.hpp"
#include "smoothfbo/rng.hpp"

namespace smoothfbo {

// Predictors expose a flat parameter vector, predictions, and the parameter
// gradient of a linear functional of the output. forward() caches the
// activations needed by backward(), so gradient loops run one pass per
// sample. Instances are owned by a single loop at a time (the cache is
// internal state); clones are deep copies that evolve independently and can
// be handed to other threads.
class Model {
 public:
  virtual ~Model() = default;

  virtual int input_dim() const = 0;
  virtual int output_dim() const = 0;
  virtual std::size_t param_count() const = 0;
  virtual const Vec64& params() const = 0;
  virtual void set_params(Vec64 p) = 0;

  // Stateless prediction.
  virtual Vec64 predict(const Vec64& x) const = 0;

  // Prediction that records activations for backward(). The returned
  // reference stays valid until the next forward() on this instance.
  virtual const Vec64& forward(const Vec64& x) = 0;

  // grad_accum += scale * d<out_grad, h(x)>/d(params) for the x of the most
  // recent forward(). Throws Error when no forward has happened.
  virtual void backward(const Vec64& out_grad, double scale,
                        Vec64& grad_accum) const = 0;

  virtual std::unique_ptr<Model> clone() const = 0;
};

class Mlp final : public Model {
 public:
  Mlp(MlpShape shape, Vec64 params);

  const MlpShape& shape() const { return shape_; }
  int input_dim() const override { return shape_.input_dim(); }
  int output_dim() const override { return shape_.output_dim(); }
  std::size_t param_count() const override { return shape_.param_count(); }
  const Vec64& params() const override { return params_; }
  void set_params(Vec64 p) override;
  Vec64 predict(const Vec64& x) const override;
  const Vec64& forward(const Vec64& x) override;
  void backward(const Vec64& out_grad, double scale,
                Vec64& grad_accum) const override;
  std::unique_ptr<Model> clone() const override;

 private:
  MlpShape shape_;
  Vec64 params_;
  mutable ForwardCache<double> cache_;
  Vec64 out_;
  bool has_forward_ = false;
};

// Scalar-output predictor linear in its parameters: h(x) = theta . phi(x)
// with phi(x) = feature * x, optionally extended by a constant 1 feature so
// an affine single-layer network (W, b) is representable exactly (theta
// layout then matches the network's [W row..., b]).
class LinearModel final : public Model {
 public:
  explicit LinearModel(Mat64 feature, bool constant_feature = false);

  const Mat64& feature_map() const { return feature_; }
  bool constant_feature() const { return constant_feature_; }
  std::size_t feature_dim() const {
    return feature_.rows + (constant_feature_ ? 1 : 0);
  }
  Vec64 features(const Vec64& x) const;

  int input_dim() const override { return static_cast<int>(feature_.cols); }
  int output_dim() const override { return 1; }
  std::size_t param_count() const override { return theta_.size(); }
  const Vec64& params() const override { return theta_; }
  void set_params(Vec64 p) override;
  Vec64 predict(const Vec64& x) const override;
  const Vec64& forward(const Vec64& x) override;
  void backward(const Vec64& out_grad, double scale,
                Vec64& grad_accum) const override;
  std::unique_ptr<Model> clone() const override;

 private:
  Mat64 feature_;
  bool constant_feature_;
  Vec64 theta_;
  Vec64 phi_cache_;
  Vec64 out_;
  bool has_forward_ = false;
};

struct InitSpec {
  enum class Scheme { kZeros, kGaussian, kFanInGaussian };
  Scheme scheme = Scheme::kFanInGaussian;
  double stddev = 1.0;           // used by kGaussian
  std::string seed_label = "init";
};

// Builds a network with the given layer dims. kZeros: all parameters zero.
// kGaussian: all parameters iid N(0, stddev^2). kFanInGaussian: weights of a
// layer with fan-in f are N(0, 1/f), biases zero. Randomness comes from
// parent.fork(spec.seed_label), so the parent stream is never consumed.
Mlp init_network(const InitSpec& spec, std::vector<int> dims,
                 Activation hidden_activation, const Rng& parent);

// One plain gradient step params -= lr * grad. Throws ShapeError on length
// mismatch and NonFiniteError if grad contains inf/nan.
void sgd_step(Model& model, const Vec64& grad, double lr);

enum class OptKind { kSgd, kAdam };

OptKind opt_kind_from_string(const std::string& name);
std::string to_string(OptKind kind);

// First-order stepper with optional Adam moments (beta1=0.9, beta2=0.999,
// eps=1e-8, bias-corrected). reset() clears the moments; SGD is stateless.
class Stepper {
 public:
  Stepper(OptKind kind, double lr) : kind_(kind), lr_(lr) {}

  void step(Vec64& params, const Vec64& grad);
  void reset();
  OptKind kind() const { return kind_; }

 private:
  OptKind kind_;
  double lr_;
  Vec64 m_, v_;
  long t_ = 0;
};

}  // namespace smoothfbo
