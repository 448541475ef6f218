#include <doctest.h>

#include <cmath>
#include <cstddef>

#include "smoothfbo/mlp.hpp"
#include "smoothfbo/models.hpp"
#include "smoothfbo/rng.hpp"

using namespace smoothfbo;

namespace {

Vec64 random_vec(Rng& rng, std::size_t n) {
  Vec64 v(n);
  for (double& x : v) x = rng.gaussian();
  return v;
}

}  // namespace

TEST_SUITE("mlp") {

TEST_CASE("parameter layout") {
  MlpShape shape{{2, 3, 1}, Activation::kGelu};
  CHECK(shape.layer_count() == 2);
  CHECK(shape.param_count() == 9 + 4);
  CHECK(shape.layer_offset(0) == 0);
  CHECK(shape.layer_offset(1) == 9);
  CHECK_THROWS_AS(MlpShape{{5}}.validate(), Error);
  CHECK_THROWS_AS((MlpShape{{2, 0, 1}}).validate(), Error);
}

TEST_CASE("identity network is the affine map") {
  MlpShape shape{{2, 1}, Activation::kGelu};  // single layer: no activation
  const Vec64 params{3.0, -2.0, 0.5};         // w00 w01 b0
  const Vec64 out = mlp_forward(shape, params, {1.0, 2.0});
  REQUIRE(out.size() == 1);
  CHECK(out[0] == doctest::Approx(3.0 - 4.0 + 0.5));
}

TEST_CASE("identity activation composes affine layers") {
  MlpShape shape{{1, 2, 1}, Activation::kIdentity};
  // layer0: w=(2;3), b=(1;-1): x -> (2x+1, 3x-1); layer1: w=(1,1), b=0.
  const Vec64 params{2.0, 3.0, 1.0, -1.0, 1.0, 1.0, 0.0};
  const Vec64 out = mlp_forward(shape, params, {2.0});
  CHECK(out[0] == doctest::Approx(5.0 + 5.0));
}

TEST_CASE("gelu matches its own derivative under finite differences") {
  CHECK(gelu(0.0) == 0.0);
  for (double u : {-3.0, -0.7, 0.0, 0.4, 2.5}) {
    const double h = 1e-6;
    const double fd = (gelu(u + h) - gelu(u - h)) / (2.0 * h);
    CHECK(gelu_grad(u) == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("backward matches finite differences") {
  for (Activation act : {Activation::kGelu, Activation::kIdentity}) {
    MlpShape shape{{3, 4, 2}, act};
    Rng rng(17);
    Vec64 params = random_vec(rng, shape.param_count());
    const Vec64 x = random_vec(rng, 3);
    const Vec64 og = random_vec(rng, 2);

    GradTape tape(shape);
    (void)mlp_forward(shape, params, x, &tape);
    const Vec64& grad = mlp_backward(shape, params, tape, og, 1.0);

    for (std::size_t i = 0; i < params.size(); i += 3) {
      const double h = 1e-6;
      Vec64 p = params;
      p[i] += h;
      const double up = dot(og, mlp_forward(shape, p, x));
      p[i] -= 2.0 * h;
      const double dn = dot(og, mlp_forward(shape, p, x));
      CHECK(grad[i] == doctest::Approx((up - dn) / (2.0 * h)).epsilon(1e-5));
    }
  }
}

TEST_CASE("backward accumulates and scale applies") {
  MlpShape shape{{2, 1}, Activation::kGelu};
  const Vec64 params{1.0, 2.0, 3.0};
  GradTape tape(shape);
  (void)mlp_forward(shape, params, {1.0, 1.0}, &tape);
  (void)mlp_backward(shape, params, tape, {1.0}, 2.0);
  const Vec64 once = tape.grad();
  (void)mlp_backward(shape, params, tape, {1.0}, 2.0);
  for (std::size_t i = 0; i < once.size(); ++i)
    CHECK(tape.grad()[i] == doctest::Approx(2.0 * once[i]));
  // d(2 * out)/dparams = 2 * (x0, x1, 1)
  CHECK(once == Vec64{2.0, 2.0, 2.0});
  tape.reset();
  CHECK_FALSE(tape.has_forward());
}

TEST_CASE("backward without a forward throws") {
  MlpShape shape{{2, 1}, Activation::kGelu};
  GradTape tape(shape);
  CHECK_THROWS_AS((void)mlp_backward(shape, {1.0, 2.0, 3.0}, tape, {1.0}, 1.0),
                  Error);
}

}  // TEST_SUITE
