#pragma once

#include <functional>

#include "smoothfbo/dense.hpp"
#include "smoothfbo/rng.hpp"

namespace smoothfbo {

// Noisy first-order oracle for a time-indexed objective F_t. A draw returns
// grad(t, lambda) plus iid N(0, sigma_f^2) noise per coordinate, so sigma_f^2
// is exactly the per-coordinate variance of one raw estimate.
struct HypergradOracle {
  int dim = 0;
  double sigma_f = 0.0;
  std::function<double(int, const Vec64&)> value;
  std::function<Vec64(int, const Vec64&)> grad;
};

Vec64 oracle_draw(const HypergradOracle& oracle, int t, const Vec64& lambda,
                  Rng& rng);

// F_t(lambda) = 0.5 |lambda - target(t)|^2 with
// target(t) = center + amplitude * sin(omega t) * direction, constrained to
// the box [lo, hi]. Everything the tracking-error bound needs is available
// in closed form: the gradient is 1-Lipschitz, the objective bound is the
// exact sup over the box and over the target segment, and the path
// variation sums per-round sups of an affine function, attained at box
// corners coordinate-wise.
struct DriftingQuadratic {
  int dim = 2;
  Vec64 center;
  Vec64 direction;   // unit
  double amplitude = 0.0;
  double omega = 0.0;
  Vec64 lo, hi;

  void validate() const;
  Vec64 target(int t) const;
  double value(int t, const Vec64& lambda) const;
  Vec64 grad(int t, const Vec64& lambda) const;

  double lipschitz() const { return 1.0; }
  // sup_t sup_{lambda in box} F_t(lambda), exact.
  double objective_bound() const;
  // sum_{t=1..T} sup_{lambda in box} |F_{t+1} - F_t|, exact.
  double variation_v1t(int t_max) const;
  // (1/w) sum_{i=0..w-1, t-i>=1} grad(t-i, lambda): the noise-free smoothed
  // gradient at the current lambda, zero-padded before round 1.
  Vec64 smoothed_true_grad(int t, int w, const Vec64& lambda) const;

  HypergradOracle oracle(double sigma_f) const;
};

// Tracking-error bound for step size 1/L over T rounds with window w:
//   2 L (2 T Q / w + V + T sigma_f^2 / (2 L w)).
double smoothed_tracking_bound(double lipschitz, double objective_bound,
                               double sigma_f, double variation, int t_max,
                               int w);

}  // namespace smoothfbo
