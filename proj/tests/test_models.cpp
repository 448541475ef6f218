#include <doctest.h>

#include <cmath>
#include <memory>

#include "smoothfbo/models.hpp"

using namespace smoothfbo;

TEST_SUITE("models") {

TEST_CASE("init schemes") {
  Rng parent(1);
  InitSpec zeros{InitSpec::Scheme::kZeros, 1.0, "z"};
  Mlp z = init_network(zeros, {3, 4, 1}, Activation::kGelu, parent);
  for (double p : z.params()) CHECK(p == 0.0);

  InitSpec fan{InitSpec::Scheme::kFanInGaussian, 1.0, "f"};
  Mlp f = init_network(fan, {3, 4, 1}, Activation::kGelu, parent);
  const MlpShape shape{{3, 4, 1}, Activation::kGelu};
  // biases of layer 0 sit at offset 4*3..4*3+3; all biases stay zero
  for (int r = 0; r < 4; ++r) CHECK(f.params()[12 + r] == 0.0);
  CHECK(f.params()[shape.layer_offset(1) + 4] == 0.0);

  // same parent and label: identical draw; different label: different
  Mlp f2 = init_network(fan, {3, 4, 1}, Activation::kGelu, parent);
  CHECK(f.params() == f2.params());
  InitSpec fan_b{InitSpec::Scheme::kFanInGaussian, 1.0, "g"};
  Mlp f3 = init_network(fan_b, {3, 4, 1}, Activation::kGelu, parent);
  CHECK(f.params() != f3.params());
}

TEST_CASE("gaussian init stddev scales") {
  Rng parent(2);
  InitSpec g1{InitSpec::Scheme::kGaussian, 1.0, "i"};
  InitSpec g3{InitSpec::Scheme::kGaussian, 3.0, "i"};
  Mlp a = init_network(g1, {2, 2}, Activation::kGelu, parent);
  Mlp b = init_network(g3, {2, 2}, Activation::kGelu, parent);
  for (std::size_t i = 0; i < a.params().size(); ++i)
    CHECK(b.params()[i] == doctest::Approx(3.0 * a.params()[i]));
}

TEST_CASE("clone is a deep copy") {
  Rng parent(3);
  Mlp net = init_network({}, {2, 3, 1}, Activation::kGelu, parent);
  std::unique_ptr<Model> copy = net.clone();
  Vec64 p = copy->params();
  p[0] += 1.0;
  copy->set_params(p);
  CHECK(net.params()[0] != copy->params()[0]);
  CHECK(net.predict({1.0, 2.0}) != copy->predict({1.0, 2.0}));
}

TEST_CASE("mlp forward/backward agree with the free functions") {
  Rng parent(4);
  Mlp net = init_network({}, {2, 3, 1}, Activation::kGelu, parent);
  const MlpShape shape{{2, 3, 1}, Activation::kGelu};
  const Vec64 x{0.3, -1.2};
  CHECK(net.predict(x) == mlp_forward(shape, net.params(), x));
  CHECK(net.forward(x) == net.predict(x));
  Vec64 acc(net.param_count(), 0.0);
  net.backward({1.0}, 1.0, acc);
  GradTape tape(shape);
  (void)mlp_forward(shape, net.params(), x, &tape);
  CHECK(acc == mlp_backward(shape, net.params(), tape, {1.0}, 1.0));
}

TEST_CASE("linear model features and gradient") {
  Mat64 eye(2, 2);
  eye(0, 0) = eye(1, 1) = 1.0;
  LinearModel lm(eye, /*constant_feature=*/true);
  CHECK(lm.param_count() == 3);
  CHECK(lm.input_dim() == 2);
  CHECK(lm.features({2.0, 5.0}) == Vec64{2.0, 5.0, 1.0});
  lm.set_params({1.0, -1.0, 0.5});
  CHECK(lm.predict({2.0, 5.0})[0] == doctest::Approx(2.0 - 5.0 + 0.5));
  (void)lm.forward({2.0, 5.0});
  Vec64 acc(3, 0.0);
  lm.backward({2.0}, 0.5, acc);  // += 0.5 * 2 * phi
  CHECK(acc == Vec64{2.0, 5.0, 1.0});
}

TEST_CASE("backward before forward throws") {
  Mat64 eye(1, 1);
  eye(0, 0) = 1.0;
  LinearModel lm(eye);
  Vec64 acc(1, 0.0);
  CHECK_THROWS_AS(lm.backward({1.0}, 1.0, acc), Error);
}

TEST_CASE("sgd_step") {
  Mat64 eye(1, 1);
  eye(0, 0) = 1.0;
  LinearModel lm(eye);
  lm.set_params({1.0});
  sgd_step(lm, {0.5}, 0.1);
  CHECK(lm.params()[0] == doctest::Approx(0.95));
  CHECK_THROWS_AS(sgd_step(lm, {0.5, 0.5}, 0.1), ShapeError);
  CHECK_THROWS_AS(sgd_step(lm, {std::nan("")}, 0.1), NonFiniteError);
}

TEST_CASE("stepper sgd and adam") {
  Vec64 p{1.0};
  Stepper sgd(OptKind::kSgd, 0.1);
  sgd.step(p, {1.0});
  CHECK(p[0] == doctest::Approx(0.9));

  // First bias-corrected adam step has magnitude ~lr regardless of gradient
  // scale.
  for (double gscale : {1.0, 100.0}) {
    Vec64 q{0.0};
    Stepper adam(OptKind::kAdam, 0.1);
    adam.step(q, {gscale});
    CHECK(q[0] == doctest::Approx(-0.1).epsilon(1e-3));
  }

  // reset forgets the moments: two fresh steps match exactly
  Vec64 a{0.5}, b{0.5};
  Stepper s1(OptKind::kAdam, 0.05), s2(OptKind::kAdam, 0.05);
  s1.step(a, {0.3});
  s1.reset();
  s1.step(a, {0.2});
  s2.step(b, {0.3});
  Vec64 c{b[0]};
  Stepper s3(OptKind::kAdam, 0.05);
  s3.step(c, {0.2});
  CHECK(a[0] == doctest::Approx(c[0]).epsilon(1e-15));
}

TEST_CASE("opt kind strings") {
  CHECK(opt_kind_from_string("sgd") == OptKind::kSgd);
  CHECK(opt_kind_from_string("adam") == OptKind::kAdam);
  CHECK(to_string(OptKind::kAdam) == "adam");
  CHECK_THROWS_AS((void)opt_kind_from_string("rmsprop"), Error);
}

}  // TEST_SUITE
