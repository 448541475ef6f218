#include "smoothfbo/losses.hpp"

#include "smoothfbo/errors.hpp"

namespace smoothfbo {

namespace {

double check_slot(const Vec64& lambda, const Sample& s) {
  if (s.slot < 0 || static_cast<std::size_t>(s.slot) >= lambda.size()) {
    throw ShapeError("weighted loss: sample slot " + std::to_string(s.slot) +
                     " outside lambda of size " + std::to_string(lambda.size()));
  }
  return lambda[static_cast<std::size_t>(s.slot)];
}

double sq_err(const Vec64& v, const Vec64& y) {
  require_same_size(v, y, "loss prediction vs target");
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double d = v[i] - y[i];
    s += d * d;
  }
  return s;
}

}  // namespace

double WeightedSquaredInnerLoss::value(const Vec64& lambda, const Vec64& v,
                                       const Sample& s) const {
  return check_slot(lambda, s) * sq_err(v, s.y);
}

Vec64 WeightedSquaredInnerLoss::d_v(const Vec64& lambda, const Vec64& v,
                                    const Sample& s) const {
  const double w = check_slot(lambda, s);
  Vec64 g = sub(v, s.y);
  for (double& gi : g) gi *= 2.0 * w;
  return g;
}

Mat64 WeightedSquaredInnerLoss::d2_v(const Vec64& lambda, const Vec64& v,
                                     const Sample& s) const {
  const double w = check_slot(lambda, s);
  require_same_size(v, s.y, "loss prediction vs target");
  Mat64 h(v.size(), v.size());
  for (std::size_t i = 0; i < v.size(); ++i) h(i, i) = 2.0 * w;
  return h;
}

Vec64 WeightedSquaredInnerLoss::d_lambda(const Vec64& lambda, const Vec64& v,
                                         const Sample& s) const {
  check_slot(lambda, s);
  Vec64 g(lambda.size(), 0.0);
  g[static_cast<std::size_t>(s.slot)] = sq_err(v, s.y);
  return g;
}

Mat64 WeightedSquaredInnerLoss::d2_lambda_v(const Vec64& lambda, const Vec64& v,
                                            const Sample& s) const {
  check_slot(lambda, s);
  require_same_size(v, s.y, "loss prediction vs target");
  Mat64 m(lambda.size(), v.size());
  for (std::size_t j = 0; j < v.size(); ++j) {
    m(static_cast<std::size_t>(s.slot), j) = 2.0 * (v[j] - s.y[j]);
  }
  return m;
}

double SquaredOuterLoss::value(const Vec64&, const Vec64& v,
                               const Sample& s) const {
  return sq_err(v, s.y);
}

Vec64 SquaredOuterLoss::d_v(const Vec64&, const Vec64& v,
                            const Sample& s) const {
  Vec64 g = sub(v, s.y);
  for (double& gi : g) gi *= 2.0;
  return g;
}

Mat64 SquaredOuterLoss::d2_v(const Vec64&, const Vec64& v,
                             const Sample& s) const {
  require_same_size(v, s.y, "loss prediction vs target");
  Mat64 h(v.size(), v.size());
  for (std::size_t i = 0; i < v.size(); ++i) h(i, i) = 2.0;
  return h;
}

Vec64 SquaredOuterLoss::d_lambda(const Vec64& lambda, const Vec64&,
                                 const Sample&) const {
  return Vec64(lambda.size(), 0.0);
}

Mat64 SquaredOuterLoss::d2_lambda_v(const Vec64& lambda, const Vec64& v,
                                    const Sample&) const {
  return Mat64(lambda.size(), v.size());
}

double empirical_loss(const PointwiseLoss& loss, const Vec64& lambda,
                      const Model& model, const std::vector<Sample>& batch) {
  if (batch.empty()) throw Error("empirical_loss: empty batch");
  double s = 0.0;
  for (const Sample& sample : batch) {
    s += loss.value(lambda, model.predict(sample.x), sample);
  }
  return s / static_cast<double>(batch.size());
}

}  // namespace smoothfbo
