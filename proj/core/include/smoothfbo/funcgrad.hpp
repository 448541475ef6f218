#pragma once

#include <vector>

#include "smoothfbo/dense.hpp"
#include "smoothfbo/drift.hpp"
#include "smoothfbo/losses.hpp"
#include "smoothfbo/models.hpp"
#include "smoothfbo/rng.hpp"

namespace smoothfbo {

struct InnerConfig {
  int steps = 5;
  double lr = 1e-4;
  double ridge = 0.0;
  OptKind optimizer = OptKind::kSgd;

  bool operator==(const InnerConfig&) const = default;
};

struct AdjointConfig {
  int steps = 5;
  double lr = 1e-3;
  double ridge = 0.0;
  OptKind optimizer = OptKind::kSgd;

  bool operator==(const AdjointConfig&) const = default;
};

// One hypergradient estimate. total is computed as g_exp + g_imp once, so
// the identity total == g_exp + g_imp holds exactly (bitwise).
struct Hypergrad {
  Vec64 g_exp;
  Vec64 g_imp;
  Vec64 total;
  double inner_final_loss = 0.0;
  double adjoint_final_loss = 0.0;
  // Optimality proxies: final full-batch gradient norm of the respective
  // objective (0 in the exact linear-solve path).
  double inner_err_proxy = 0.0;
  double adjoint_err_proxy = 0.0;
  // Set when some per-sample prediction Hessian of the inner loss has a
  // negative eigenvalue: the adjoint quadratic is then not convex and the
  // estimate is untrusted (diagnostic only, never fatal).
  bool curvature_warning = false;
};

// Weighted empirical inner objective: sum over slots of the slot-mean of
// inner_loss, plus 0.5 * ridge * |theta|^2. (Each slot batch is averaged;
// slots are summed, matching the window-weighted training objective.)
double inner_objective(const PointwiseLoss& inner_loss, const Vec64& lambda,
                       const Model& h,
                       const std::vector<std::vector<Sample>>& slots,
                       double ridge);

// Runs cfg.steps optimizer steps of h on the objective above and returns the
// final objective value. Throws NonFiniteError when the iterates blow up.
double inner_opt(const Vec64& lambda, Model& h,
                 const std::vector<std::vector<Sample>>& slots,
                 const PointwiseLoss& inner_loss, const InnerConfig& cfg);

struct AdjointReport {
  double final_loss = 0.0;
  double grad_norm = 0.0;
  bool curvature_warning = false;
};

// Empirical adjoint objective for a at fixed h:
//   (1/|inner|) sum_i 0.5 a(x_i)^T H_i a(x_i)
// + (1/|outer|) sum_j a(x_j)^T g_j + 0.5 * cfg.ridge * |xi|^2
// with H_i the prediction Hessian of inner_loss at h(x_i) and g_j the
// prediction gradient of outer_loss at h(x_j). Runs cfg.steps optimizer
// steps on a and reports the final value, gradient norm, and whether any
// H_i fails the positive-semidefinite check.
AdjointReport adjoint_opt(const Vec64& lambda, Model& a, const Model& h,
                          const std::vector<const Sample*>& inner_flat,
                          const std::vector<const Sample*>& outer_flat,
                          const PointwiseLoss& inner_loss,
                          const PointwiseLoss& outer_loss,
                          const AdjointConfig& cfg);

// Full estimator for one round: inner_opt on h (warm-started in place),
// adjoint_opt on a, then
//   g_exp = mean over the outer batch of d_lambda outer_loss at h(x)
//   g_imp = mean over the inner union batch of d2_lambda_v inner_loss at
//           h(x) applied to a(x).
// subsample_fraction < 1 subsamples the union/outer batches (without
// replacement, via rng) for the adjoint and assembly stages only; inner
// optimization always sees the full window data.
Hypergrad func_grad(const Vec64& lambda, Model& h, Model& a,
                    const RoundData& data, const PointwiseLoss& inner_loss,
                    const PointwiseLoss& outer_loss, const InnerConfig& inner_cfg,
                    const AdjointConfig& adjoint_cfg, double subsample_fraction,
                    Rng& rng);

// --- Exact linear path -----------------------------------------------------
//
// For scalar-output LinearModel predictors and losses quadratic in the
// prediction, the inner problem and the adjoint quadratic solve in closed
// form. Used by the analytic checks; also the reference the iterative path
// is tested against.

// Sets h's parameters to the exact minimizer of inner_objective.
void exact_inner_solve(const Vec64& lambda, LinearModel& h,
                       const std::vector<std::vector<Sample>>& slots,
                       const PointwiseLoss& inner_loss, double ridge);

// Sets a's parameters to the exact minimizer of the adjoint quadratic with
// ridge `ridge_adj`. Exactness of the overall hypergradient additionally
// needs a and h to share one feature map (the adjoint must live in the same
// function space as the predictor).
void exact_adjoint_solve(const Vec64& lambda, LinearModel& a,
                         const LinearModel& h,
                         const std::vector<const Sample*>& inner_flat,
                         const std::vector<const Sample*>& outer_flat,
                         const PointwiseLoss& inner_loss,
                         const PointwiseLoss& outer_loss, double ridge_adj);

// Exact hypergradient via the adjoint route. The adjoint ridge is
// inner_ridge / slot_count: the adjoint quadratic averages over the union
// batch while the inner objective sums slot means, and when every slot has
// the same batch size this rescaling makes the two solves consistent, so
// the result equals the exact derivative of the regularized inner solution
// (matching parametric_hypergrad up to solver roundoff).
Hypergrad exact_func_grad(const Vec64& lambda, LinearModel& h, LinearModel& a,
                          const RoundData& data,
                          const PointwiseLoss& inner_loss,
                          const PointwiseLoss& outer_loss, double inner_ridge);

// Independent reference: differentiate the exact inner solution in parameter
// space (solve for theta*, then d theta*/d lambda via the implicit function
// theorem) and chain with the outer gradient. Shares no assembly code with
// the adjoint route.
Vec64 parametric_hypergrad(const Vec64& lambda, LinearModel& h,
                           const RoundData& data,
                           const PointwiseLoss& inner_loss,
                           const PointwiseLoss& outer_loss, double inner_ridge);

std::vector<const Sample*> flatten_slots(
    const std::vector<std::vector<Sample>>& slots);

}  // namespace smoothfbo
