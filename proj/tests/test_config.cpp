#include <doctest.h>

#include "smoothfbo/config.hpp"

using namespace smoothfbo;

namespace {

// every field different from its default
ExperimentConfig mutated() {
  ExperimentConfig c;
  c.method = Method::kOracle;
  c.t_max = 77;
  c.w = 9;
  c.seeds = {11, 22};
  c.out_dir = "elsewhere";
  c.outer_lr = 0.25;
  c.constraint = Constraint::kBox;
  c.box_lo = {-1.5, -1.5, -1.5};
  c.box_hi = {1.5, 1.5, 1.5};
  c.lambda_init = 0.5;
  c.data.input_dim = 3;
  c.data.batch = 7;
  c.data.window = 4;
  c.data.noise_std = 0.125;
  c.drift_kind = "jump";
  c.drift_beta = 2.5;
  c.drift_omega = 0.031;
  c.drift_jump_interval = 17;
  c.drift_jump_magnitude = 0.75;
  c.drift_direction_seed = 99;
  c.model_kind = "linear";
  c.hidden = {8};
  c.inner.lr = 0.002;
  c.inner.steps = 3;
  c.inner.ridge = 0.01;
  c.inner.optimizer = OptKind::kAdam;
  c.adjoint.lr = 0.004;
  c.adjoint.steps = 6;
  c.adjoint.ridge = 0.02;
  c.adjoint.optimizer = OptKind::kAdam;
  c.warm_start = false;
  c.subsample = 0.5;
  c.probe_rounds = {10, 20};
  c.probe_replicates = 4;
  c.oracle_dim = 3;
  c.oracle_amplitude = 1.75;
  c.oracle_omega = 0.042;
  c.oracle_sigma_f = 0.3;
  c.oracle_alpha = 0.8;
  c.oracle_box_halfwidth = 3.5;
  return c;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("empty file gives the defaults") {
  CHECK(parse_config("") == ExperimentConfig{});
  CHECK(parse_config("# just a comment\n\n") == ExperimentConfig{});
}

TEST_CASE("serialize/parse round trip") {
  const ExperimentConfig c = mutated();
  const std::string text = serialize_config(c);
  CHECK(parse_config(text) == c);
  CHECK(serialize_config(parse_config(text)) == text);
  // defaults round-trip too
  CHECK(parse_config(serialize_config(ExperimentConfig{})) ==
        ExperimentConfig{});
}

TEST_CASE("tolerant line syntax") {
  ExperimentConfig c = parse_config(
      "T=7\n"
      "  w   =  3   # trailing comment\n"
      "\n"
      "seeds = 4,5 , 6\n"
      "inner.optimizer = adam\n");
  CHECK(c.t_max == 7);
  CHECK(c.w == 3);
  CHECK(c.seeds == std::vector<std::uint64_t>{4, 5, 6});
  CHECK(c.inner.optimizer == OptKind::kAdam);
}

TEST_CASE("unknown keys are rejected with their position") {
  try {
    (void)parse_config("T = 5\nbogus.key = 1\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line == 2);
    CHECK(e.key == "bogus.key");
  }
}

TEST_CASE("bad values name the key") {
  try {
    (void)parse_config("T = abc\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line == 1);
    CHECK(e.key == "T");
  }
  CHECK_THROWS_AS((void)parse_config("T = 0\n"), ConfigError);
  CHECK_THROWS_AS((void)parse_config("outer.lr = -1\n"), ConfigError);
  CHECK_THROWS_AS((void)parse_config("subsample = 1.5\n"), ConfigError);
  CHECK_THROWS_AS((void)parse_config("warm_start = maybe\n"), ConfigError);
  CHECK_THROWS_AS((void)parse_config("seeds = \n"), ConfigError);
  CHECK_THROWS_AS((void)parse_config("drift.kind = brownian\n"), ConfigError);
  CHECK_THROWS_AS((void)parse_config("just a line\n"), ConfigError);
  // scalar config files do not take method lists
  CHECK_THROWS_AS((void)parse_config("method = smoothfbo, fbo_w1\n"),
                  ConfigError);
}

TEST_CASE("cross-field validation") {
  // box bounds must match the weight dimension (data.window here)
  CHECK_THROWS_AS((void)parse_config("outer.constraint = box\n"
                                     "outer.box_lo = 0, 0\n"
                                     "outer.box_hi = 1, 1\n"),
                  ConfigError);  // default window is 5
  ExperimentConfig ok = parse_config(
      "outer.constraint = box\n"
      "data.window = 2\n"
      "outer.box_lo = 0, 0\n"
      "outer.box_hi = 1, 1\n");
  CHECK(ok.constraint == Constraint::kBox);

  CHECK_THROWS_AS((void)parse_config("outer.constraint = box\n"
                                     "data.window = 2\n"
                                     "outer.box_lo = 2, 2\n"
                                     "outer.box_hi = 1, 1\n"),
                  ConfigError);
  CHECK_THROWS_AS((void)parse_config("T = 10\nprobe.rounds = 20\n"),
                  ConfigError);

  ExperimentConfig c;
  c.hidden.clear();  // mlp needs hidden layers
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ExperimentConfig{};
  c.seeds.clear();
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ExperimentConfig{};
  c.model_kind = "linear";
  c.hidden.clear();  // fine without a network
  c.validate();
}

TEST_CASE("method names") {
  CHECK(method_from_string("smoothfbo") == Method::kSmoothFbo);
  CHECK(method_from_string("fbo_w1") == Method::kFboW1);
  CHECK(method_from_string("unrolled") == Method::kUnrolled);
  CHECK(method_from_string("oracle") == Method::kOracle);
  for (Method m : {Method::kSmoothFbo, Method::kFboW1, Method::kUnrolled,
                   Method::kOracle}) {
    CHECK(method_from_string(to_string(m)) == m);
  }
  CHECK_THROWS_AS((void)method_from_string("sgd"), ConfigError);
}

TEST_CASE("grid files accept method and window lists") {
  GridSpec grid = parse_grid(
      "method = smoothfbo, fbo_w1\n"
      "w = 5, 50\n"
      "T = 40\n");
  CHECK(grid.methods ==
        std::vector<Method>{Method::kSmoothFbo, Method::kFboW1});
  CHECK(grid.windows == std::vector<int>{5, 50});
  CHECK(grid.base.t_max == 40);

  // scalars still work and land in both the base and the lists
  GridSpec single = parse_grid("method = oracle\nw = 7\n");
  CHECK(single.methods == std::vector<Method>{Method::kOracle});
  CHECK(single.windows == std::vector<int>{7});
  CHECK(single.base.method == Method::kOracle);
  CHECK(single.base.w == 7);

  CHECK_THROWS_AS((void)parse_grid("method = smoothfbo, warp\n"), ConfigError);
  CHECK_THROWS_AS((void)parse_grid("w = 5, 0\n"), ConfigError);
}

TEST_CASE("run configs derived from the file") {
  ExperimentConfig c;
  c.w = 40;
  c.method = Method::kFboW1;
  EstimationRunConfig w1 = c.estimation_config(5);
  CHECK(w1.w == 1);
  CHECK_FALSE(w1.smooth);
  CHECK(w1.seed == 5);

  c.method = Method::kSmoothFbo;
  EstimationRunConfig sm = c.estimation_config(6);
  CHECK(sm.w == 40);
  CHECK(sm.smooth);
  CHECK(sm.t_max == c.t_max);
  CHECK(sm.inner == c.inner);

  OracleRunConfig oc = c.oracle_config(7);
  CHECK(oc.lo == Vec64{-2.0, -2.0});
  CHECK(oc.hi == Vec64{2.0, 2.0});
  CHECK(oc.lambda1 == Vec64{1.0, 1.0});
  CHECK(oc.constraint == Constraint::kBox);
  CHECK(oc.seed == 7);

  DriftingQuadratic quad = c.oracle_testbed();
  CHECK(quad.dim == 2);
  CHECK(quad.center == Vec64{0.0, 0.0});
  CHECK(quad.amplitude == 1.0);

  BenchmarkProblem p = c.make_problem();
  CHECK(p.dgp == c.data);
  CHECK_FALSE(p.linear_predictor);
  CHECK(p.hidden == c.hidden);
  c.model_kind = "linear";
  CHECK(c.make_problem().linear_predictor);
}

}  // TEST_SUITE
