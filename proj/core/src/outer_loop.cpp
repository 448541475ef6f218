#include "smoothfbo/outer_loop.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "smoothfbo/errors.hpp"
#include "smoothfbo/unrolled.hpp"

namespace smoothfbo {

Constraint constraint_from_string(const std::string& name) {
  if (name == "nonnegative") return Constraint::kNonnegative;
  if (name == "box") return Constraint::kBox;
  if (name == "none") return Constraint::kUnconstrained;
  throw ConfigError("unknown constraint '" + name +
                        "' (expected nonnegative, box, or none)",
                    0, "constraint");
}

std::string to_string(Constraint c) {
  switch (c) {
    case Constraint::kNonnegative: return "nonnegative";
    case Constraint::kBox: return "box";
    case Constraint::kUnconstrained: return "none";
  }
  throw Error("invalid constraint enum value");
}

Vec64 project(const Vec64& lambda, Constraint c, const Vec64& lo,
              const Vec64& hi) {
  Vec64 out = lambda;
  switch (c) {
    case Constraint::kUnconstrained:
      break;
    case Constraint::kNonnegative:
      for (double& v : out) v = std::max(v, 0.0);
      break;
    case Constraint::kBox:
      require_same_size(lambda, lo, "project box lo");
      require_same_size(lambda, hi, "project box hi");
      for (std::size_t i = 0; i < out.size(); ++i) {
        if (lo[i] > hi[i]) throw ShapeError("project: box has lo > hi");
        out[i] = std::min(std::max(out[i], lo[i]), hi[i]);
      }
      break;
  }
  return out;
}

// ---------------------------------------------------------------------------

RegretLedger run_oracle_mode(const HypergradOracle& oracle,
                             const OracleRunConfig& cfg) {
  if (cfg.t_max < 1) throw Error("run_oracle_mode: t_max must be >= 1");
  if (cfg.w < 1) throw Error("run_oracle_mode: window must be >= 1");
  if (static_cast<int>(cfg.lambda1.size()) != oracle.dim) {
    throw ShapeError("run_oracle_mode: lambda1 does not match oracle dim");
  }
  if (!oracle.value || !oracle.grad) {
    throw Error("run_oracle_mode: oracle closures not set");
  }

  Rng root(cfg.seed);
  RegretLedger ledger(oracle.dim, /*with_true_columns=*/true);
  Vec64 lambda = project(cfg.lambda1, cfg.constraint, cfg.lo, cfg.hi);

  for (int t = 1; t <= cfg.t_max; ++t) {
    Rng round = root.fork("round", t);

    // Window average of the last w objectives' gradients, all queried at the
    // CURRENT iterate (one fresh noisy query per window slot), zero-padded
    // before round 1. Re-querying keeps the drive an unbiased estimate of
    // the windowed objective's gradient at lambda_t, which the step size
    // alpha = 1/L relies on: averaging estimates cached at past iterates
    // instead turns the update into delayed feedback that oscillates for
    // wide windows at this step size. (Estimation mode, where a query costs
    // a full inner solve, is the place that caches.) Oldest slot first, so
    // the floating-point sum order is fixed.
    Vec64 drive(static_cast<std::size_t>(oracle.dim), 0.0);
    Vec64 true_sm(static_cast<std::size_t>(oracle.dim), 0.0);
    for (int i = cfg.w - 1; i >= 0; --i) {
      if (t - i < 1) continue;
      axpy_inplace(drive, 1.0, oracle_draw(oracle, t - i, lambda, round));
      axpy_inplace(true_sm, 1.0, oracle.grad(t - i, lambda));
    }
    for (double& v : drive) v /= static_cast<double>(cfg.w);
    for (double& v : true_sm) v /= static_cast<double>(cfg.w);

    RoundStats stats;
    stats.outer_loss = oracle.value(t, lambda);
    ledger.blr_update(t, drive, stats, lambda, norm2sq(true_sm));

    lambda = project(add(lambda, scaled(drive, -cfg.alpha)), cfg.constraint,
                     cfg.lo, cfg.hi);
    if (!all_finite(lambda)) {
      throw NonFiniteError("run_oracle_mode: iterate diverged (round " +
                           std::to_string(t) + ")");
    }
  }
  return ledger;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<int> predictor_dims(const BenchmarkProblem& problem) {
  std::vector<int> dims;
  dims.push_back(problem.dgp.input_dim);
  if (!problem.linear_predictor) {
    dims.insert(dims.end(), problem.hidden.begin(), problem.hidden.end());
  }
  dims.push_back(1);
  return dims;
}

Activation predictor_activation(const BenchmarkProblem& problem) {
  return problem.linear_predictor ? Activation::kIdentity : Activation::kGelu;
}

void validate_estimation_config(const EstimationRunConfig& cfg) {
  if (cfg.t_max < 1) throw Error("estimation run: t_max must be >= 1");
  if (cfg.w < 1) throw Error("estimation run: window must be >= 1");
  if (!(cfg.subsample > 0.0) || cfg.subsample > 1.0) {
    throw Error("estimation run: subsample must be in (0, 1]");
  }
  if (cfg.probe_replicates < 2 && !cfg.probe_rounds.empty()) {
    throw Error("estimation run: probe_replicates must be >= 2");
  }
}

bool is_probe_round(const EstimationRunConfig& cfg, int t) {
  return std::find(cfg.probe_rounds.begin(), cfg.probe_rounds.end(), t) !=
         cfg.probe_rounds.end();
}

[[noreturn]] void rethrow_with_round(const NonFiniteError& e, int t) {
  throw NonFiniteError(std::string(e.what()) + " (round " + std::to_string(t) +
                       ")");
}

}  // namespace

std::unique_ptr<Model> BenchmarkProblem::make_predictor(
    const Rng& run_rng, const InitSpec& spec) const {
  std::vector<int> dims;
  dims.push_back(dgp.input_dim);
  if (!linear_predictor) {
    dims.insert(dims.end(), hidden.begin(), hidden.end());
  }
  dims.push_back(1);
  Mlp seed_net = init_network(
      spec, dims, linear_predictor ? Activation::kIdentity : Activation::kGelu,
      run_rng);
  if (!linear_predictor) return std::make_unique<Mlp>(std::move(seed_net));

  // Identity features plus the constant term: the affine single-layer net
  // above maps onto theta = [W row, b] exactly.
  const std::size_t d = static_cast<std::size_t>(dgp.input_dim);
  Mat64 eye(d, d);
  for (std::size_t i = 0; i < d; ++i) eye(i, i) = 1.0;
  auto lm = std::make_unique<LinearModel>(std::move(eye),
                                          /*constant_feature=*/true);
  lm->set_params(seed_net.params());
  return lm;
}

EstimationResult run_estimation_mode(const BenchmarkProblem& problem,
                                     const EstimationRunConfig& cfg) {
  validate_estimation_config(cfg);
  const int k = problem.dgp.window;

  Rng root(cfg.seed);
  std::unique_ptr<Model> h = problem.make_predictor(root, problem.h_init);
  std::unique_ptr<Model> a = problem.make_predictor(root, problem.a_init);

  const WeightedSquaredInnerLoss inner_loss;
  const SquaredOuterLoss outer_loss;

  Vec64 lambda = project(Vec64(static_cast<std::size_t>(k), cfg.lambda_init),
                         cfg.constraint, cfg.lo, cfg.hi);
  HypergradWindow window(cfg.w, k);
  EstimationResult result{RegretLedger(k, /*with_true_columns=*/false), {}};

  for (int t = 1; t <= cfg.t_max; ++t) {
    const RoundData data = sample_round(problem.schedule, root, t, problem.dgp);

    if (!cfg.warm_start) {
      Rng reinit = root.fork("reinit", t);
      h = problem.make_predictor(reinit, problem.h_init);
      a = problem.make_predictor(reinit, problem.a_init);
    }

    if (is_probe_round(cfg, t)) {
      // Frozen copies so replicate draws all start from the pre-round state
      // and the main trajectory never observes the probe.
      const std::unique_ptr<Model> h0 = h->clone();
      const std::unique_ptr<Model> a0 = a->clone();
      const Vec64 lam = lambda;
      auto raw_estimator = [&](Rng& stream) -> Vec64 {
        std::unique_ptr<Model> hc = h0->clone();
        std::unique_ptr<Model> ac = a0->clone();
        RoundData fresh =
            sample_round_fresh(problem.schedule, stream, t, problem.dgp);
        Hypergrad hg = func_grad(lam, *hc, *ac, fresh, inner_loss, outer_loss,
                                 cfg.inner, cfg.adjoint, cfg.subsample, stream);
        return hg.total;
      };
      const Rng probe_root = root.fork("probe-root", t);
      result.probes.push_back(
          {t, variance_probe(raw_estimator, k, cfg.w, cfg.probe_replicates,
                             probe_root)});
    }

    Rng round_rng = root.fork("round", t);
    Hypergrad hg;
    try {
      hg = func_grad(lambda, *h, *a, data, inner_loss, outer_loss, cfg.inner,
                     cfg.adjoint, cfg.subsample, round_rng);
    } catch (const NonFiniteError& e) {
      rethrow_with_round(e, t);
    }

    const Vec64 driving =
        cfg.smooth ? window.push_and_smooth(hg.total) : hg.total;

    RoundStats stats;
    stats.outer_loss = empirical_loss(outer_loss, lambda, *h, data.outer);
    stats.g_exp_norm = norm2(hg.g_exp);
    stats.g_imp_norm = norm2(hg.g_imp);
    stats.inner_err_proxy = hg.inner_err_proxy;
    stats.adjoint_err_proxy = hg.adjoint_err_proxy;
    result.ledger.blr_update(t, driving, stats, lambda);

    lambda = project(add(lambda, scaled(driving, -cfg.outer_lr)),
                     cfg.constraint, cfg.lo, cfg.hi);
    if (!all_finite(lambda)) {
      throw NonFiniteError("run_estimation_mode: iterate diverged (round " +
                           std::to_string(t) + ")");
    }
  }
  return result;
}

EstimationResult run_unrolled_mode(const BenchmarkProblem& problem,
                                   const EstimationRunConfig& cfg) {
  validate_estimation_config(cfg);
  if (cfg.inner.optimizer != OptKind::kSgd) {
    throw Error(
        "unrolled mode differentiates plain gradient steps; set the inner "
        "optimizer to sgd");
  }
  const int k = problem.dgp.window;
  const MlpShape shape{predictor_dims(problem), predictor_activation(problem)};
  const UnrolledConfig ucfg{cfg.inner.steps, cfg.inner.lr, cfg.inner.ridge};

  Rng root(cfg.seed);
  Vec64 theta = init_network(problem.h_init, shape.dims,
                             shape.hidden_activation, root)
                    .params();
  Mlp holder(shape, theta);

  const SquaredOuterLoss outer_loss;
  Vec64 lambda = project(Vec64(static_cast<std::size_t>(k), cfg.lambda_init),
                         cfg.constraint, cfg.lo, cfg.hi);
  HypergradWindow window(cfg.w, k);
  EstimationResult result{RegretLedger(k, /*with_true_columns=*/false), {}};

  for (int t = 1; t <= cfg.t_max; ++t) {
    const RoundData data = sample_round(problem.schedule, root, t, problem.dgp);

    if (!cfg.warm_start) {
      Rng reinit = root.fork("reinit", t);
      theta = init_network(problem.h_init, shape.dims, shape.hidden_activation,
                           reinit)
                  .params();
    }

    if (is_probe_round(cfg, t)) {
      const Vec64 theta0 = theta;
      const Vec64 lam = lambda;
      auto raw_estimator = [&](Rng& stream) -> Vec64 {
        Vec64 th = theta0;
        RoundData fresh =
            sample_round_fresh(problem.schedule, stream, t, problem.dgp);
        return unrolled_hypergrad(shape, th, lam, fresh, ucfg);
      };
      const Rng probe_root = root.fork("probe-root", t);
      result.probes.push_back(
          {t, variance_probe(raw_estimator, k, cfg.w, cfg.probe_replicates,
                             probe_root)});
    }

    Vec64 total;
    try {
      total = unrolled_hypergrad(shape, theta, lambda, data, ucfg);
    } catch (const NonFiniteError& e) {
      rethrow_with_round(e, t);
    }

    const Vec64 driving = cfg.smooth ? window.push_and_smooth(total) : total;

    holder.set_params(theta);
    RoundStats stats;
    stats.outer_loss = empirical_loss(outer_loss, lambda, holder, data.outer);
    // The outer loss carries no direct lambda term here, so the whole
    // estimate is the implicit part.
    stats.g_exp_norm = 0.0;
    stats.g_imp_norm = norm2(total);
    result.ledger.blr_update(t, driving, stats, lambda);

    lambda = project(add(lambda, scaled(driving, -cfg.outer_lr)),
                     cfg.constraint, cfg.lo, cfg.hi);
    if (!all_finite(lambda)) {
      throw NonFiniteError("run_unrolled_mode: iterate diverged (round " +
                           std::to_string(t) + ")");
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

V1tEstimate measure_v1t(const DriftingQuadratic& quad, int t_max) {
  return {quad.variation_v1t(t_max), 0.0};
}

namespace {

struct GridEval {
  Vec64 value;      // mean holdout loss per grid point
  Vec64 variance;   // per-sample variance per grid point
  std::size_t n = 0;
};

GridEval eval_objective_grid(const BenchmarkProblem& problem,
                             const std::vector<Vec64>& grid, int t,
                             const Rng& root, int n_mc,
                             const PointwiseLoss& inner_loss,
                             const PointwiseLoss& outer_loss, LinearModel& h) {
  const RoundData data = sample_round(problem.schedule, root, t, problem.dgp);

  DgpConfig eval_cfg = problem.dgp;
  eval_cfg.batch = n_mc;
  Rng eval_rng = root.fork("v1t-eval", t);
  const std::vector<Sample> eval_set =
      sample_round_fresh(problem.schedule, eval_rng, t, eval_cfg).outer;

  GridEval out;
  out.n = eval_set.size();
  out.value.reserve(grid.size());
  out.variance.reserve(grid.size());
  for (const Vec64& lam : grid) {
    exact_inner_solve(lam, h, data.inner, inner_loss, /*ridge=*/0.0);
    double mean = 0.0, m2 = 0.0;
    std::size_t n = 0;
    for (const Sample& s : eval_set) {
      const double v =
          outer_loss.value(lam, h.predict(s.x), s);
      ++n;
      const double d = v - mean;
      mean += d / static_cast<double>(n);
      m2 += d * (v - mean);
    }
    out.value.push_back(mean);
    out.variance.push_back(n > 1 ? m2 / static_cast<double>(n - 1) : 0.0);
  }
  return out;
}

}  // namespace

V1tEstimate measure_v1t(const BenchmarkProblem& problem,
                        const std::vector<Vec64>& lambda_grid, int t_max,
                        int n_mc, std::uint64_t seed) {
  if (!problem.linear_predictor) {
    throw Error("measure_v1t: needs the linear predictor (exact inner solves)");
  }
  if (lambda_grid.empty()) throw Error("measure_v1t: empty lambda grid");
  if (t_max < 1) throw Error("measure_v1t: t_max must be >= 1");
  if (n_mc < 2) throw Error("measure_v1t: n_mc must be >= 2");

  const WeightedSquaredInnerLoss inner_loss;
  const SquaredOuterLoss outer_loss;
  const Rng root(seed);
  auto h_owned = problem.make_predictor(root, problem.h_init);
  auto* h = dynamic_cast<LinearModel*>(h_owned.get());
  if (h == nullptr) throw Error("measure_v1t: predictor is not linear");

  double total = 0.0;
  double se2 = 0.0;
  GridEval prev = eval_objective_grid(problem, lambda_grid, 1, root, n_mc,
                                      inner_loss, outer_loss, *h);
  for (int t = 2; t <= t_max + 1; ++t) {
    GridEval cur = eval_objective_grid(problem, lambda_grid, t, root, n_mc,
                                       inner_loss, outer_loss, *h);
    double best = -1.0;
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
      const double d = std::abs(cur.value[i] - prev.value[i]);
      if (d > best) {
        best = d;
        best_i = i;
      }
    }
    total += best;
    // Consecutive terms share one eval set, so treating terms as independent
    // slightly understates the error; fine for a diagnostic.
    se2 += cur.variance[best_i] / static_cast<double>(cur.n) +
           prev.variance[best_i] / static_cast<double>(prev.n);
    prev = std::move(cur);
  }
  return {total, std::sqrt(se2)};
}

// ---------------------------------------------------------------------------

ReductionCheck linear_reduction_check(const Vec64& lambda, LinearModel& h,
                                      LinearModel& a, const RoundData& data,
                                      const PointwiseLoss& inner_loss,
                                      const PointwiseLoss& outer_loss,
                                      double inner_ridge) {
  ReductionCheck out;
  const Hypergrad hg =
      exact_func_grad(lambda, h, a, data, inner_loss, outer_loss, inner_ridge);
  out.functional = hg.total;
  out.parametric = parametric_hypergrad(lambda, h, data, inner_loss,
                                        outer_loss, inner_ridge);
  require_same_size(out.functional, out.parametric, "reduction check");
  for (std::size_t i = 0; i < out.functional.size(); ++i) {
    out.max_abs_diff = std::max(out.max_abs_diff,
                                std::abs(out.functional[i] - out.parametric[i]));
  }
  return out;
}

double h2t_term(const std::vector<Vec64>& lambda_grid, LinearModel& h,
                const RoundData& prev, const RoundData& cur,
                const PointwiseLoss& inner_loss, double inner_ridge) {
  if (lambda_grid.empty()) throw Error("h2t_term: empty lambda grid");
  double sup = 0.0;
  for (const Vec64& lam : lambda_grid) {
    exact_inner_solve(lam, h, prev.inner, inner_loss, inner_ridge);
    const Vec64 theta_prev = h.params();
    exact_inner_solve(lam, h, cur.inner, inner_loss, inner_ridge);
    sup = std::max(sup, norm2sq(sub(theta_prev, h.params())));
  }
  return sup;
}

}  // namespace smoothfbo
