#include <doctest.h>

#include <cmath>

#include "smoothfbo/oracle.hpp"

using namespace smoothfbo;

namespace {

DriftingQuadratic make_quad() {
  DriftingQuadratic q;
  q.dim = 2;
  q.center = {0.3, -0.2};
  q.direction = {0.6, 0.8};
  q.amplitude = 1.3;
  q.omega = 0.37;
  q.lo = {-2.0, -1.5};
  q.hi = {1.5, 2.2};
  return q;
}

}  // namespace

TEST_SUITE("oracle") {

TEST_CASE("target, value and gradient identities") {
  DriftingQuadratic q = make_quad();
  q.validate();
  const double s = 1.3 * std::sin(0.37 * 5.0);
  Vec64 tgt = q.target(5);
  CHECK(tgt[0] == doctest::Approx(0.3 + s * 0.6));
  CHECK(tgt[1] == doctest::Approx(-0.2 + s * 0.8));

  const Vec64 lambda{1.0, -1.0};
  CHECK(q.value(5, lambda) ==
        doctest::Approx(0.5 * norm2sq(sub(lambda, tgt))));
  CHECK(q.grad(5, lambda) == sub(lambda, tgt));
  CHECK(q.lipschitz() == 1.0);
  // gradient of value: finite difference sanity
  const double h = 1e-6;
  Vec64 lp = lambda;
  lp[0] += h;
  CHECK(q.grad(5, lambda)[0] ==
        doctest::Approx((q.value(5, lp) - q.value(5, lambda)) / h)
            .epsilon(1e-4));
}

TEST_CASE("validate rejects malformed instances") {
  DriftingQuadratic q = make_quad();
  q.direction = {1.0, 1.0};  // not unit
  CHECK_THROWS_AS(q.validate(), Error);
  q = make_quad();
  q.lo = {2.0, -1.5};  // lo > hi in coordinate 0
  CHECK_THROWS_AS(q.validate(), Error);
  q = make_quad();
  q.center = {0.0};
  CHECK_THROWS_AS(q.validate(), ShapeError);
  q = make_quad();
  q.dim = 0;
  CHECK_THROWS_AS(q.validate(), Error);
}

TEST_CASE("objective bound equals the brute-force sup") {
  DriftingQuadratic q = make_quad();
  // the sup is attained at a box corner and a drift endpoint, both of which
  // the scan below includes, so this matches to roundoff
  double brute = 0.0;
  for (int k = 0; k <= 2000; ++k) {
    const double s = -1.0 + 2.0 * static_cast<double>(k) / 2000.0;
    Vec64 tgt = q.center;
    axpy_inplace(tgt, s * q.amplitude, q.direction);
    for (int mask = 0; mask < 4; ++mask) {
      Vec64 corner{(mask & 1) ? q.hi[0] : q.lo[0],
                   (mask & 2) ? q.hi[1] : q.lo[1]};
      brute = std::max(brute, 0.5 * norm2sq(sub(corner, tgt)));
    }
  }
  CHECK(q.objective_bound() == doctest::Approx(brute).epsilon(1e-12));
}

TEST_CASE("path variation equals the brute-force corner sum") {
  DriftingQuadratic q = make_quad();
  const int t_max = 200;
  double brute = 0.0;
  for (int t = 1; t <= t_max; ++t) {
    double step = 0.0;
    for (int mask = 0; mask < 4; ++mask) {
      const Vec64 corner{(mask & 1) ? q.hi[0] : q.lo[0],
                         (mask & 2) ? q.hi[1] : q.lo[1]};
      step = std::max(step,
                      std::fabs(q.value(t + 1, corner) - q.value(t, corner)));
    }
    brute += step;
  }
  CHECK(q.variation_v1t(t_max) == doctest::Approx(brute).epsilon(1e-10));
  CHECK(q.variation_v1t(0) == 0.0);
}

TEST_CASE("smoothed true gradient zero-pads before round one") {
  DriftingQuadratic q = make_quad();
  const Vec64 lambda{0.5, 0.5};
  Vec64 g1 = q.smoothed_true_grad(1, 3, lambda);
  Vec64 expect = scaled(q.grad(1, lambda), 1.0 / 3.0);
  CHECK(g1 == expect);

  Vec64 g5 = q.smoothed_true_grad(5, 3, lambda);
  Vec64 manual = add(add(q.grad(5, lambda), q.grad(4, lambda)),
                     q.grad(3, lambda));
  CHECK(g5[0] == doctest::Approx(manual[0] / 3.0).epsilon(1e-15));
  CHECK(g5[1] == doctest::Approx(manual[1] / 3.0).epsilon(1e-15));

  // w=1 is the raw gradient
  CHECK(q.smoothed_true_grad(7, 1, lambda) == q.grad(7, lambda));
}

TEST_CASE("oracle draws") {
  DriftingQuadratic q = make_quad();
  HypergradOracle noiseless = q.oracle(0.0);
  Rng rng(3);
  const Vec64 lambda{0.4, 0.1};
  CHECK(oracle_draw(noiseless, 9, lambda, rng) == q.grad(9, lambda));
  CHECK(noiseless.value(9, lambda) == q.value(9, lambda));

  HypergradOracle noisy = q.oracle(0.5);
  const int n = 20000;
  Vec64 mean(2, 0.0);
  Vec64 m2(2, 0.0);
  for (int i = 0; i < n; ++i) {
    Vec64 d = oracle_draw(noisy, 9, lambda, rng);
    axpy_inplace(mean, 1.0, d);
    m2[0] += d[0] * d[0];
    m2[1] += d[1] * d[1];
  }
  for (int c = 0; c < 2; ++c) {
    mean[static_cast<std::size_t>(c)] /= n;
    const double var = m2[static_cast<std::size_t>(c)] / n -
                       mean[static_cast<std::size_t>(c)] *
                           mean[static_cast<std::size_t>(c)];
    CHECK(mean[static_cast<std::size_t>(c)] ==
          doctest::Approx(q.grad(9, lambda)[static_cast<std::size_t>(c)])
              .epsilon(0.05));
    CHECK(var == doctest::Approx(0.25).epsilon(0.05));
  }
}

TEST_CASE("tracking bound formula") {
  // 2 L (2 T Q / w + V + T sigma^2 / (2 L w))
  CHECK(smoothed_tracking_bound(1.0, 2.0, 0.5, 3.0, 100, 10) ==
        doctest::Approx(88.5));
  // halving the window doubles both window terms
  CHECK(smoothed_tracking_bound(1.0, 2.0, 0.0, 0.0, 100, 5) ==
        doctest::Approx(2.0 * (2.0 * 100.0 * 2.0 / 5.0)));
  CHECK_THROWS_AS((void)smoothed_tracking_bound(1.0, 2.0, 0.5, 3.0, 0, 10),
                  Error);
  CHECK_THROWS_AS((void)smoothed_tracking_bound(1.0, 2.0, 0.5, 3.0, 100, 0),
                  Error);
}

}  // TEST_SUITE
