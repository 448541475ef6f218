#pragma once

#include <memory>
#include <vector>

#include "smoothfbo/dense.hpp"
#include "smoothfbo/models.hpp"

namespace smoothfbo {

// One observation. `slot` indexes the coordinate of the weight vector that
// owns this sample (inner batches), 0 where irrelevant (holdout batches).
struct Sample {
  Vec64 x;
  Vec64 y;
  int slot = 0;
};

// Pointwise loss l(lambda, v, sample) evaluated at a prediction v, together
// with every partial derivative the hypergradient assembly needs. All
// methods are pure; dimensions: v and y share the prediction dimension,
// lambda is the outer weight vector.
class PointwiseLoss {
 public:
  virtual ~PointwiseLoss() = default;

  virtual double value(const Vec64& lambda, const Vec64& v,
                       const Sample& s) const = 0;
  // dl/dv, length dim(v).
  virtual Vec64 d_v(const Vec64& lambda, const Vec64& v,
                    const Sample& s) const = 0;
  // d2l/dv2, dim(v) x dim(v), symmetric.
  virtual Mat64 d2_v(const Vec64& lambda, const Vec64& v,
                     const Sample& s) const = 0;
  // dl/dlambda, length dim(lambda).
  virtual Vec64 d_lambda(const Vec64& lambda, const Vec64& v,
                         const Sample& s) const = 0;
  // d2l/(dlambda dv), dim(lambda) x dim(v).
  virtual Mat64 d2_lambda_v(const Vec64& lambda, const Vec64& v,
                            const Sample& s) const = 0;
};

// l(lambda, v, s) = lambda[s.slot] * |v - y|^2. The slot weight scales the
// squared error, so d_lambda is a one-hot vector and the lambda/v cross
// derivative has a single nonzero row.
class WeightedSquaredInnerLoss final : public PointwiseLoss {
 public:
  double value(const Vec64&, const Vec64&, const Sample&) const override;
  Vec64 d_v(const Vec64&, const Vec64&, const Sample&) const override;
  Mat64 d2_v(const Vec64&, const Vec64&, const Sample&) const override;
  Vec64 d_lambda(const Vec64&, const Vec64&, const Sample&) const override;
  Mat64 d2_lambda_v(const Vec64&, const Vec64&, const Sample&) const override;
};

// l(lambda, v, s) = |v - y|^2, independent of lambda.
class SquaredOuterLoss final : public PointwiseLoss {
 public:
  double value(const Vec64&, const Vec64&, const Sample&) const override;
  Vec64 d_v(const Vec64&, const Vec64&, const Sample&) const override;
  Mat64 d2_v(const Vec64&, const Vec64&, const Sample&) const override;
  Vec64 d_lambda(const Vec64&, const Vec64&, const Sample&) const override;
  Mat64 d2_lambda_v(const Vec64&, const Vec64&, const Sample&) const override;
};

// Mean of loss.value over a batch using the model's predictions.
// Throws Error on an empty batch.
double empirical_loss(const PointwiseLoss& loss, const Vec64& lambda,
                      const Model& model, const std::vector<Sample>& batch);

}  // namespace smoothfbo
