#include "smoothfbo/oracle.hpp"

#include <cmath>

#include "smoothfbo/errors.hpp"

namespace smoothfbo {

Vec64 oracle_draw(const HypergradOracle& oracle, int t, const Vec64& lambda,
                  Rng& rng) {
  Vec64 g = oracle.grad(t, lambda);
  require_size(g, static_cast<std::size_t>(oracle.dim), "oracle gradient");
  for (double& gi : g) gi += oracle.sigma_f * rng.gaussian();
  return g;
}

void DriftingQuadratic::validate() const {
  if (dim < 1) throw Error("DriftingQuadratic: dim must be >= 1");
  require_size(center, static_cast<std::size_t>(dim), "quadratic center");
  require_size(direction, static_cast<std::size_t>(dim), "quadratic direction");
  require_size(lo, static_cast<std::size_t>(dim), "quadratic box lo");
  require_size(hi, static_cast<std::size_t>(dim), "quadratic box hi");
  const double n = norm2(direction);
  if (std::fabs(n - 1.0) > 1e-12) {
    throw Error("DriftingQuadratic: direction must be a unit vector");
  }
  for (int i = 0; i < dim; ++i) {
    if (!(lo[static_cast<std::size_t>(i)] <= hi[static_cast<std::size_t>(i)])) {
      throw Error("DriftingQuadratic: box lo > hi");
    }
  }
}

Vec64 DriftingQuadratic::target(int t) const {
  const double s = amplitude * std::sin(omega * static_cast<double>(t));
  Vec64 out(center);
  axpy_inplace(out, s, direction);
  return out;
}

double DriftingQuadratic::value(int t, const Vec64& lambda) const {
  return 0.5 * norm2sq(sub(lambda, target(t)));
}

Vec64 DriftingQuadratic::grad(int t, const Vec64& lambda) const {
  return sub(lambda, target(t));
}

double DriftingQuadratic::objective_bound() const {
  // For a fixed target, sup over the box decomposes per coordinate as the
  // larger squared distance to the two box edges. The target segment is
  // center + s * amplitude * direction with s in [-1, 1]; the per-coordinate
  // max over s of a convex quadratic in s sits at an endpoint, so scanning
  // s in {-1, +1} is exact.
  double best = 0.0;
  for (double s : {-1.0, 1.0}) {
    double total = 0.0;
    for (int i = 0; i < dim; ++i) {
      const std::size_t c = static_cast<std::size_t>(i);
      const double tgt = center[c] + s * amplitude * direction[c];
      const double d_lo = lo[c] - tgt;
      const double d_hi = hi[c] - tgt;
      total += std::max(d_lo * d_lo, d_hi * d_hi);
    }
    best = std::max(best, 0.5 * total);
  }
  return best;
}

double DriftingQuadratic::variation_v1t(int t_max) const {
  // F_{t+1}(l) - F_t(l) = <l, a - b> + (|b|^2 - |a|^2)/2 for targets
  // b = target(t+1), a = target(t): affine in l, so its sup and inf over the
  // box are attained coordinate-wise at box edges; sup |.| is the larger of
  // |sup| and |inf|.
  double total = 0.0;
  for (int t = 1; t <= t_max; ++t) {
    const Vec64 a = target(t);
    const Vec64 b = target(t + 1);
    const double constant = 0.5 * (norm2sq(b) - norm2sq(a));
    double max_v = constant;
    double min_v = constant;
    for (int i = 0; i < dim; ++i) {
      const std::size_t c = static_cast<std::size_t>(i);
      const double coef = a[c] - b[c];
      const double v1 = coef * lo[c];
      const double v2 = coef * hi[c];
      max_v += std::max(v1, v2);
      min_v += std::min(v1, v2);
    }
    total += std::max(std::fabs(max_v), std::fabs(min_v));
  }
  return total;
}

Vec64 DriftingQuadratic::smoothed_true_grad(int t, int w,
                                            const Vec64& lambda) const {
  Vec64 acc(static_cast<std::size_t>(dim), 0.0);
  for (int i = 0; i < w; ++i) {
    const int ti = t - i;
    if (ti < 1) break;
    axpy_inplace(acc, 1.0, grad(ti, lambda));
  }
  return scaled(acc, 1.0 / static_cast<double>(w));
}

HypergradOracle DriftingQuadratic::oracle(double sigma_f) const {
  validate();
  HypergradOracle o;
  o.dim = dim;
  o.sigma_f = sigma_f;
  const DriftingQuadratic self = *this;
  o.value = [self](int t, const Vec64& l) { return self.value(t, l); };
  o.grad = [self](int t, const Vec64& l) { return self.grad(t, l); };
  return o;
}

double smoothed_tracking_bound(double lipschitz, double objective_bound,
                               double sigma_f, double variation, int t_max,
                               int w) {
  if (w < 1 || t_max < 1) throw Error("smoothed_tracking_bound: bad T or w");
  const double t = static_cast<double>(t_max);
  const double ww = static_cast<double>(w);
  return 2.0 * lipschitz *
         (2.0 * t * objective_bound / ww + variation +
          t * sigma_f * sigma_f / (2.0 * lipschitz * ww));
}

}  // namespace smoothfbo
