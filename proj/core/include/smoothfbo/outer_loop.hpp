#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "smoothfbo/drift.hpp"
#include "smoothfbo/funcgrad.hpp"
#include "smoothfbo/oracle.hpp"
#include "smoothfbo/smoother.hpp"

namespace smoothfbo {

enum class Constraint { kNonnegative, kBox, kUnconstrained };

Constraint constraint_from_string(const std::string& name);
std::string to_string(Constraint c);

// Euclidean projection onto the feasible set. Box bounds are only read for
// kBox and must satisfy lo <= hi coordinate-wise. Idempotent.
Vec64 project(const Vec64& lambda, Constraint c, const Vec64& lo = {},
              const Vec64& hi = {});

// ---------------------------------------------------------------------------
// Oracle mode: iterate on a synthetic first-order oracle where the true
// gradient is known, recording both the estimated and the true smoothed
// regret terms. Each round queries all w window objectives afresh at the
// current iterate (cheap here), so the smoothed drive is unbiased for the
// windowed objective's gradient at lambda_t; that is the form covered by
// the alpha = 1/L tracking bound.

struct OracleRunConfig {
  int t_max = 2000;
  int w = 1;
  double alpha = 1.0;
  Vec64 lambda1;
  Constraint constraint = Constraint::kBox;
  Vec64 lo, hi;
  std::uint64_t seed = 1;
};

RegretLedger run_oracle_mode(const HypergradOracle& oracle,
                             const OracleRunConfig& cfg);

// ---------------------------------------------------------------------------
// Estimation mode: the full pipeline on the drifting regression stream.

struct BenchmarkProblem {
  DriftSchedule schedule;
  DgpConfig dgp;
  std::vector<int> hidden = {32, 32};   // ignored for linear_predictor
  bool linear_predictor = false;        // identity features + constant term
  InitSpec h_init{InitSpec::Scheme::kFanInGaussian, 1.0, "init-h"};
  InitSpec a_init{InitSpec::Scheme::kFanInGaussian, 1.0, "init-a"};

  explicit BenchmarkProblem(DriftSchedule sched, DgpConfig cfg = {})
      : schedule(std::move(sched)), dgp(cfg) {}

  std::unique_ptr<Model> make_predictor(const Rng& run_rng,
                                        const InitSpec& spec) const;
};

struct EstimationRunConfig {
  int t_max = 1000;
  int w = 50;
  double outer_lr = 1e-3;
  double lambda_init = 1.0;
  Constraint constraint = Constraint::kNonnegative;
  Vec64 lo, hi;
  InnerConfig inner;
  AdjointConfig adjoint;
  bool warm_start = true;
  double subsample = 1.0;
  // false: the raw per-round estimate drives the update directly (the
  // unsmoothed baseline); true: the window average does. With w = 1 the two
  // paths are numerically identical.
  bool smooth = true;
  std::uint64_t seed = 1;
  std::vector<int> probe_rounds;
  int probe_replicates = 8;
};

struct ProbeRecord {
  int t = 0;
  VarianceProbeResult result;
};

struct EstimationResult {
  RegretLedger ledger;
  std::vector<ProbeRecord> probes;
};

// Runs T rounds of smoothed hypergradient descent on the weights. Per round:
// draw the round data, warm-start (or re-init) the predictor and adjoint,
// estimate the hypergradient, smooth, log, step, project. Probe rounds
// additionally measure the estimator's variance at the frozen pre-round
// state via fresh data draws; probes never perturb the main trajectory.
EstimationResult run_estimation_mode(const BenchmarkProblem& problem,
                                     const EstimationRunConfig& cfg);

// Same loop driven by the exact derivative of the unrolled inner SGD
// (parametric baseline). Requires cfg.inner.optimizer == kSgd; the losses
// are the benchmark pair.
EstimationResult run_unrolled_mode(const BenchmarkProblem& problem,
                                   const EstimationRunConfig& cfg);

// ---------------------------------------------------------------------------
// Path-variation measurement.

struct V1tEstimate {
  double value = 0.0;
  double std_error = 0.0;  // Monte Carlo only; 0 for the analytic path
};

// Exact closed form on the analytic testbed.
V1tEstimate measure_v1t(const DriftingQuadratic& quad, int t_max);

// Monte Carlo on a linear-predictor problem: per round, the inner problem is
// solved exactly on the round's stream data for every lambda in the grid,
// the outer objective is estimated with n_mc fresh holdout draws, and the
// per-round sup of |F_{t+1} - F_t| over the grid is summed. The reported
// standard error propagates the holdout sampling noise of the selected grid
// points.
V1tEstimate measure_v1t(const BenchmarkProblem& problem,
                        const std::vector<Vec64>& lambda_grid, int t_max,
                        int n_mc, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Consistency probes for the linear testbed.

struct ReductionCheck {
  Vec64 functional;   // adjoint-route hypergradient (exact solves)
  Vec64 parametric;   // implicit-function-theorem route
  double max_abs_diff = 0.0;
};

// Both exact hypergradient routes on one round of data; they agree whenever
// h and a share a feature map and the losses are quadratic in the
// prediction.
ReductionCheck linear_reduction_check(const Vec64& lambda, LinearModel& h,
                                      LinearModel& a, const RoundData& data,
                                      const PointwiseLoss& inner_loss,
                                      const PointwiseLoss& outer_loss,
                                      double inner_ridge);

// sup over the lambda grid of |theta*_prev(lambda) - theta*_cur(lambda)|^2,
// the parameter-space path-variation term of consecutive rounds.
double h2t_term(const std::vector<Vec64>& lambda_grid, LinearModel& h,
                const RoundData& prev, const RoundData& cur,
                const PointwiseLoss& inner_loss, double inner_ridge);

}  // namespace smoothfbo
