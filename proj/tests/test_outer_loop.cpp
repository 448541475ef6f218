#include <doctest.h>

#include <cmath>
#include <string>

#include "smoothfbo/outer_loop.hpp"

using namespace smoothfbo;

namespace {

DriftingQuadratic stationary_quad() {
  DriftingQuadratic q;
  q.dim = 2;
  q.center = {0.5, -0.25};
  q.direction = {0.6, 0.8};
  q.amplitude = 0.0;
  q.omega = 0.0;
  q.lo = {-2.0, -2.0};
  q.hi = {2.0, 2.0};
  return q;
}

BenchmarkProblem tiny_problem(bool linear) {
  DgpConfig dgp;
  dgp.input_dim = 2;
  dgp.batch = 3;
  dgp.window = 2;
  dgp.noise_std = 0.05;
  DriftSchedule sched = DriftSchedule::sinusoidal(
      {0.7, -0.7}, 0.0, 1.0, 0.05, drift_direction(0, 3));
  BenchmarkProblem problem(std::move(sched), dgp);
  problem.hidden = {3};
  problem.linear_predictor = linear;
  return problem;
}

EstimationRunConfig tiny_config() {
  EstimationRunConfig cfg;
  cfg.t_max = 4;
  cfg.w = 2;
  cfg.outer_lr = 1e-2;
  cfg.inner.steps = 2;
  cfg.inner.lr = 1e-3;
  cfg.adjoint.steps = 2;
  cfg.adjoint.lr = 1e-3;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST_SUITE("outer_loop") {

TEST_CASE("projection") {
  CHECK(project({-1.0, 2.0}, Constraint::kUnconstrained) == Vec64{-1.0, 2.0});
  CHECK(project({-1.0, 2.0}, Constraint::kNonnegative) == Vec64{0.0, 2.0});
  CHECK(project({-1.0, 2.0}, Constraint::kBox, {0.0, 0.0}, {1.5, 1.5}) ==
        Vec64{0.0, 1.5});
  // idempotent
  Vec64 p = project({-1.0, 2.0}, Constraint::kBox, {0.0, 0.0}, {1.5, 1.5});
  CHECK(project(p, Constraint::kBox, {0.0, 0.0}, {1.5, 1.5}) == p);
  CHECK_THROWS_AS(
      (void)project({0.5}, Constraint::kBox, {1.0}, {0.0}), ShapeError);
  CHECK_THROWS_AS(
      (void)project({0.5, 0.5}, Constraint::kBox, {0.0}, {1.0}), ShapeError);
}

TEST_CASE("constraint names") {
  CHECK(constraint_from_string("nonnegative") == Constraint::kNonnegative);
  CHECK(constraint_from_string("box") == Constraint::kBox);
  CHECK(constraint_from_string("none") == Constraint::kUnconstrained);
  CHECK(to_string(Constraint::kBox) == "box");
  CHECK(to_string(constraint_from_string("nonnegative")) == "nonnegative");
  CHECK_THROWS_AS((void)constraint_from_string("simplex"), ConfigError);
}

TEST_CASE("oracle mode logs before stepping and fills every round") {
  DriftingQuadratic q = stationary_quad();
  q.amplitude = 0.8;
  OracleRunConfig cfg;
  cfg.t_max = 12;
  cfg.w = 4;
  cfg.lambda1 = {5.0, 5.0};  // outside the box
  cfg.lo = q.lo;
  cfg.hi = q.hi;
  cfg.seed = 2;
  RegretLedger ledger = run_oracle_mode(q.oracle(0.3), cfg);
  REQUIRE(ledger.rows().size() == 12);
  CHECK(ledger.with_true_columns());
  CHECK(ledger.lambda_dim() == 2);
  CHECK(ledger.rows()[0].t == 1);
  CHECK(ledger.rows()[0].lambda == Vec64{2.0, 2.0});
  CHECK(ledger.rows()[0].stats.outer_loss ==
        doctest::Approx(q.value(1, {2.0, 2.0})));
  CHECK(std::isnan(ledger.rows()[0].stats.g_exp_norm));
  CHECK(ledger.blr_total() > 0.0);
  CHECK(ledger.rows().back().blr_cum == doctest::Approx(ledger.blr_total()));
}

TEST_CASE("oracle mode on a stationary objective converges in one step") {
  DriftingQuadratic q = stationary_quad();
  OracleRunConfig cfg;
  cfg.t_max = 6;
  cfg.w = 1;
  cfg.alpha = 1.0;
  cfg.lambda1 = {1.5, 1.5};
  cfg.lo = q.lo;
  cfg.hi = q.hi;
  RegretLedger ledger = run_oracle_mode(q.oracle(0.0), cfg);
  CHECK(ledger.rows()[1].lambda == q.center);
  for (std::size_t i = 1; i < ledger.rows().size(); ++i) {
    CHECK(ledger.rows()[i].blr_term == 0.0);
    CHECK(ledger.rows()[i].true_blr_term == 0.0);
  }
}

TEST_CASE("noise-free estimated and true regret terms coincide exactly") {
  // Every window slot is re-queried at the current iterate, so with zero
  // oracle noise the driving estimate IS the noise-free smoothed gradient.
  DriftingQuadratic q = stationary_quad();
  q.amplitude = 1.0;
  q.omega = 0.21;
  OracleRunConfig cfg;
  cfg.t_max = 50;
  cfg.w = 7;
  cfg.lambda1 = {0.0, 0.0};
  cfg.lo = q.lo;
  cfg.hi = q.hi;
  RegretLedger ledger = run_oracle_mode(q.oracle(0.0), cfg);
  for (const LedgerRow& row : ledger.rows()) {
    CHECK(row.blr_term == row.true_blr_term);
  }
  // with noise they must differ
  RegretLedger noisy = run_oracle_mode(q.oracle(0.5), cfg);
  CHECK(noisy.rows()[5].blr_term != noisy.rows()[5].true_blr_term);
}

TEST_CASE("oracle mode reports the round when the iterate diverges") {
  DriftingQuadratic q;
  q.dim = 1;
  q.center = {0.0};
  q.direction = {1.0};
  q.amplitude = 0.0;
  q.omega = 0.0;
  q.lo = {-1e9};
  q.hi = {1e9};
  OracleRunConfig cfg;
  cfg.t_max = 2000;
  cfg.w = 1;
  cfg.alpha = 4.0;  // |1 - alpha| = 3: geometric blowup
  cfg.lambda1 = {1.0};
  cfg.constraint = Constraint::kUnconstrained;
  try {
    (void)run_oracle_mode(q.oracle(0.0), cfg);
    FAIL("expected NonFiniteError");
  } catch (const NonFiniteError& e) {
    CHECK(std::string(e.what()).find("round") != std::string::npos);
  }
}

TEST_CASE("oracle mode validates its config") {
  DriftingQuadratic q = stationary_quad();
  OracleRunConfig cfg;
  cfg.lambda1 = {0.0, 0.0};
  cfg.lo = q.lo;
  cfg.hi = q.hi;
  cfg.t_max = 0;
  CHECK_THROWS_AS((void)run_oracle_mode(q.oracle(0.0), cfg), Error);
  cfg.t_max = 5;
  cfg.w = 0;
  CHECK_THROWS_AS((void)run_oracle_mode(q.oracle(0.0), cfg), Error);
  cfg.w = 1;
  cfg.lambda1 = {0.0};
  CHECK_THROWS_AS((void)run_oracle_mode(q.oracle(0.0), cfg), ShapeError);
  cfg.lambda1 = {0.0, 0.0};
  HypergradOracle empty;
  empty.dim = 2;
  CHECK_THROWS_AS((void)run_oracle_mode(empty, cfg), Error);
}

TEST_CASE("estimation mode round shape and probes") {
  BenchmarkProblem problem = tiny_problem(false);
  EstimationRunConfig cfg = tiny_config();
  cfg.probe_rounds = {3};
  cfg.probe_replicates = 3;
  EstimationResult res = run_estimation_mode(problem, cfg);
  REQUIRE(res.ledger.rows().size() == 4);
  CHECK_FALSE(res.ledger.with_true_columns());
  CHECK(res.ledger.lambda_dim() == 2);  // one weight per window slot
  CHECK(res.ledger.rows()[0].lambda == Vec64{1.0, 1.0});
  CHECK(res.ledger.rows()[0].t == 1);
  CHECK(all_finite(res.ledger.rows().back().lambda));
  CHECK(res.ledger.rows()[2].stats.inner_err_proxy > 0.0);

  REQUIRE(res.probes.size() == 1);
  CHECK(res.probes[0].t == 3);
  CHECK(res.probes[0].result.replicates == 3);
  CHECK(res.probes[0].result.window == 2);
  CHECK(res.probes[0].result.mean_variance >= 0.0);

  // probe rounds past the horizon simply never fire
  cfg.probe_rounds = {99};
  CHECK(run_estimation_mode(problem, cfg).probes.empty());
}

TEST_CASE("estimation mode is reproducible") {
  BenchmarkProblem problem = tiny_problem(false);
  EstimationRunConfig cfg = tiny_config();
  const std::string a = run_estimation_mode(problem, cfg).ledger.to_csv();
  const std::string b = run_estimation_mode(problem, cfg).ledger.to_csv();
  CHECK(a == b);
  cfg.seed = 4;
  CHECK(a != run_estimation_mode(problem, cfg).ledger.to_csv());
}

TEST_CASE("window of one makes smoothing a no-op") {
  BenchmarkProblem problem = tiny_problem(false);
  EstimationRunConfig cfg = tiny_config();
  cfg.w = 1;
  cfg.smooth = true;
  const std::string smoothed = run_estimation_mode(problem, cfg).ledger.to_csv();
  cfg.smooth = false;
  CHECK(run_estimation_mode(problem, cfg).ledger.to_csv() == smoothed);
}

TEST_CASE("estimation mode without warm starts") {
  BenchmarkProblem problem = tiny_problem(false);
  EstimationRunConfig cfg = tiny_config();
  cfg.t_max = 3;
  cfg.warm_start = false;
  EstimationResult res = run_estimation_mode(problem, cfg);
  CHECK(res.ledger.rows().size() == 3);
}

TEST_CASE("estimation config validation") {
  BenchmarkProblem problem = tiny_problem(false);
  EstimationRunConfig cfg = tiny_config();
  cfg.subsample = 0.0;
  CHECK_THROWS_AS((void)run_estimation_mode(problem, cfg), Error);
  cfg = tiny_config();
  cfg.probe_rounds = {2};
  cfg.probe_replicates = 1;
  CHECK_THROWS_AS((void)run_estimation_mode(problem, cfg), Error);
  cfg = tiny_config();
  cfg.w = 0;
  CHECK_THROWS_AS((void)run_estimation_mode(problem, cfg), Error);
}

TEST_CASE("unrolled mode runs and insists on sgd") {
  BenchmarkProblem problem = tiny_problem(false);
  EstimationRunConfig cfg = tiny_config();
  cfg.t_max = 3;
  EstimationResult res = run_unrolled_mode(problem, cfg);
  REQUIRE(res.ledger.rows().size() == 3);
  CHECK(res.ledger.rows()[0].stats.g_exp_norm == 0.0);
  CHECK(all_finite(res.ledger.rows().back().lambda));

  const std::string once = res.ledger.to_csv();
  CHECK(run_unrolled_mode(problem, cfg).ledger.to_csv() == once);

  cfg.inner.optimizer = OptKind::kAdam;
  CHECK_THROWS_AS((void)run_unrolled_mode(problem, cfg), Error);
}

TEST_CASE("predictor factory") {
  BenchmarkProblem linear = tiny_problem(true);
  Rng root(1);
  auto lm = linear.make_predictor(root, linear.h_init);
  CHECK(dynamic_cast<LinearModel*>(lm.get()) != nullptr);
  CHECK(lm->param_count() == 3);  // identity features + constant

  BenchmarkProblem net = tiny_problem(false);
  auto mlp = net.make_predictor(root, net.h_init);
  CHECK(dynamic_cast<Mlp*>(mlp.get()) != nullptr);
  CHECK(mlp->param_count() ==
        MlpShape{{2, 3, 1}, Activation::kGelu}.param_count());
}

TEST_CASE("analytic path variation measurement") {
  DriftingQuadratic q = stationary_quad();
  q.amplitude = 1.1;
  q.omega = 0.4;
  V1tEstimate est = measure_v1t(q, 60);
  CHECK(est.value == q.variation_v1t(60));
  CHECK(est.std_error == 0.0);
}

TEST_CASE("monte carlo path variation on the linear testbed") {
  BenchmarkProblem problem = tiny_problem(true);
  const std::vector<Vec64> grid{{1.0, 1.0}, {0.5, 1.5}};
  V1tEstimate est = measure_v1t(problem, grid, 3, 64, 7);
  CHECK(est.value >= 0.0);
  CHECK(est.std_error > 0.0);
  CHECK(std::isfinite(est.value));

  // same seed, same answer
  V1tEstimate again = measure_v1t(problem, grid, 3, 64, 7);
  CHECK(est.value == again.value);

  BenchmarkProblem mlp = tiny_problem(false);
  CHECK_THROWS_AS((void)measure_v1t(mlp, grid, 3, 64, 7), Error);
  CHECK_THROWS_AS((void)measure_v1t(problem, {}, 3, 64, 7), Error);
  CHECK_THROWS_AS((void)measure_v1t(problem, grid, 3, 1, 7), Error);
}

TEST_CASE("exact hypergradient routes agree on round data") {
  BenchmarkProblem problem = tiny_problem(true);
  RoundData rd = sample_round(problem.schedule, Rng(5), 4, problem.dgp);
  Rng root(6);
  auto h_owned = problem.make_predictor(root, problem.h_init);
  auto a_owned = problem.make_predictor(root, problem.a_init);
  auto& h = dynamic_cast<LinearModel&>(*h_owned);
  auto& a = dynamic_cast<LinearModel&>(*a_owned);
  WeightedSquaredInnerLoss inner;
  SquaredOuterLoss outer;
  ReductionCheck chk =
      linear_reduction_check({1.0, 1.0}, h, a, rd, inner, outer, 0.1);
  CHECK(chk.max_abs_diff < 1e-10);
  CHECK(chk.functional.size() == 2);
}

TEST_CASE("h2t term vanishes for identical rounds") {
  BenchmarkProblem problem = tiny_problem(true);
  RoundData r4 = sample_round(problem.schedule, Rng(5), 4, problem.dgp);
  RoundData r5 = sample_round(problem.schedule, Rng(5), 5, problem.dgp);
  Rng root(6);
  auto h_owned = problem.make_predictor(root, problem.h_init);
  auto& h = dynamic_cast<LinearModel&>(*h_owned);
  WeightedSquaredInnerLoss inner;
  const std::vector<Vec64> grid{{1.0, 1.0}, {0.5, 1.5}};
  CHECK(h2t_term(grid, h, r4, r4, inner, 0.1) == 0.0);
  CHECK(h2t_term(grid, h, r4, r5, inner, 0.1) > 0.0);
  CHECK_THROWS_AS((void)h2t_term({}, h, r4, r5, inner, 0.1), Error);
}

}  // TEST_SUITE
