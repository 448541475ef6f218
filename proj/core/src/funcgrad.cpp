#include "smoothfbo/funcgrad.hpp"

#include <algorithm>
#include <cmath>

#include "smoothfbo/errors.hpp"

namespace smoothfbo {

std::vector<const Sample*> flatten_slots(
    const std::vector<std::vector<Sample>>& slots) {
  std::vector<const Sample*> flat;
  for (const auto& batch : slots) {
    for (const Sample& s : batch) flat.push_back(&s);
  }
  return flat;
}

namespace {

void require_slots(const std::vector<std::vector<Sample>>& slots,
                   std::string_view who) {
  if (slots.empty()) throw Error(std::string(who) + ": no inner slots");
  for (const auto& batch : slots) {
    if (batch.empty()) throw Error(std::string(who) + ": empty slot batch");
  }
}

Vec64 inner_objective_grad(const Vec64& lambda, Model& h,
                           const std::vector<std::vector<Sample>>& slots,
                           const PointwiseLoss& inner_loss, double ridge) {
  Vec64 grad(h.param_count(), 0.0);
  for (const auto& batch : slots) {
    const double scale = 1.0 / static_cast<double>(batch.size());
    for (const Sample& smp : batch) {
      const Vec64& v = h.forward(smp.x);
      h.backward(inner_loss.d_v(lambda, v, smp), scale, grad);
    }
  }
  if (ridge != 0.0) axpy_inplace(grad, ridge, h.params());
  return grad;
}

// Negative-curvature check for one prediction Hessian, tolerance scaled to
// the matrix magnitude.
bool indefinite(const Mat64& hess) {
  double mag = 0.0;
  for (double v : hess.a) mag = std::max(mag, std::fabs(v));
  const Vec64 eig = jacobi_eigenvalues(hess);
  return eig.front() < -1e-9 * (1.0 + mag);
}

struct AdjointData {
  std::vector<Mat64> inner_hess;   // per inner sample, at h(x)
  std::vector<Vec64> outer_grad;   // per outer sample, at h(x)
  bool curvature_warning = false;
};

AdjointData precompute_adjoint_data(const Vec64& lambda, const Model& h,
                                    const std::vector<const Sample*>& inner_flat,
                                    const std::vector<const Sample*>& outer_flat,
                                    const PointwiseLoss& inner_loss,
                                    const PointwiseLoss& outer_loss) {
  AdjointData data;
  data.inner_hess.reserve(inner_flat.size());
  for (const Sample* s : inner_flat) {
    Mat64 hess = inner_loss.d2_v(lambda, h.predict(s->x), *s);
    if (!data.curvature_warning && indefinite(hess)) {
      data.curvature_warning = true;
    }
    data.inner_hess.push_back(std::move(hess));
  }
  data.outer_grad.reserve(outer_flat.size());
  for (const Sample* s : outer_flat) {
    data.outer_grad.push_back(outer_loss.d_v(lambda, h.predict(s->x), *s));
  }
  return data;
}

Vec64 adjoint_grad(Model& a, const std::vector<const Sample*>& inner_flat,
                   const std::vector<const Sample*>& outer_flat,
                   const AdjointData& data, double ridge) {
  Vec64 grad(a.param_count(), 0.0);
  const double in_scale = 1.0 / static_cast<double>(inner_flat.size());
  const double out_scale = 1.0 / static_cast<double>(outer_flat.size());
  for (std::size_t i = 0; i < inner_flat.size(); ++i) {
    const Vec64& av = a.forward(inner_flat[i]->x);
    a.backward(matvec(data.inner_hess[i], av), in_scale, grad);
  }
  for (std::size_t j = 0; j < outer_flat.size(); ++j) {
    a.forward(outer_flat[j]->x);
    a.backward(data.outer_grad[j], out_scale, grad);
  }
  if (ridge != 0.0) axpy_inplace(grad, ridge, a.params());
  return grad;
}

double adjoint_value(Model& a, const std::vector<const Sample*>& inner_flat,
                     const std::vector<const Sample*>& outer_flat,
                     const AdjointData& data, double ridge) {
  double val = 0.0;
  const double in_scale = 1.0 / static_cast<double>(inner_flat.size());
  const double out_scale = 1.0 / static_cast<double>(outer_flat.size());
  for (std::size_t i = 0; i < inner_flat.size(); ++i) {
    const Vec64 av = a.predict(inner_flat[i]->x);
    val += in_scale * 0.5 * dot(av, matvec(data.inner_hess[i], av));
  }
  for (std::size_t j = 0; j < outer_flat.size(); ++j) {
    val += out_scale * dot(a.predict(outer_flat[j]->x), data.outer_grad[j]);
  }
  val += 0.5 * ridge * norm2sq(a.params());
  return val;
}

struct Assembled {
  Vec64 g_exp;
  Vec64 g_imp;
};

// g_exp: outer-batch mean of d_lambda outer_loss. g_imp: inner-union mean of
// d2_lambda_v inner_loss applied to the adjoint's prediction.
Assembled assemble(const Vec64& lambda, const Model& h, const Model& a,
                   const std::vector<const Sample*>& inner_flat,
                   const std::vector<const Sample*>& outer_flat,
                   const PointwiseLoss& inner_loss,
                   const PointwiseLoss& outer_loss) {
  Assembled out;
  out.g_exp.assign(lambda.size(), 0.0);
  out.g_imp.assign(lambda.size(), 0.0);
  const double out_scale = 1.0 / static_cast<double>(outer_flat.size());
  for (const Sample* s : outer_flat) {
    axpy_inplace(out.g_exp, out_scale,
                 outer_loss.d_lambda(lambda, h.predict(s->x), *s));
  }
  const double in_scale = 1.0 / static_cast<double>(inner_flat.size());
  for (const Sample* s : inner_flat) {
    const Mat64 cross = inner_loss.d2_lambda_v(lambda, h.predict(s->x), *s);
    axpy_inplace(out.g_imp, in_scale, matvec(cross, a.predict(s->x)));
  }
  return out;
}

std::vector<const Sample*> subsample(std::vector<const Sample*> flat,
                                     double fraction, Rng& rng) {
  if (fraction >= 1.0) return flat;
  if (!(fraction > 0.0)) throw Error("subsample fraction must be in (0, 1]");
  const std::size_t n = flat.size();
  std::size_t k = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(n)));
  k = std::max<std::size_t>(k, 1);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.next_u64() % (n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  std::vector<const Sample*> out;
  out.reserve(k);
  for (std::size_t i : idx) out.push_back(flat[i]);
  return out;
}

}  // namespace

double inner_objective(const PointwiseLoss& inner_loss, const Vec64& lambda,
                       const Model& h,
                       const std::vector<std::vector<Sample>>& slots,
                       double ridge) {
  require_slots(slots, "inner_objective");
  double total = 0.0;
  for (const auto& batch : slots) {
    double s = 0.0;
    for (const Sample& smp : batch) {
      s += inner_loss.value(lambda, h.predict(smp.x), smp);
    }
    total += s / static_cast<double>(batch.size());
  }
  if (ridge != 0.0) total += 0.5 * ridge * norm2sq(h.params());
  return total;
}

double inner_opt(const Vec64& lambda, Model& h,
                 const std::vector<std::vector<Sample>>& slots,
                 const PointwiseLoss& inner_loss, const InnerConfig& cfg) {
  require_slots(slots, "inner_opt");
  if (cfg.steps < 0) throw Error("inner_opt: negative step count");
  Stepper stepper(cfg.optimizer, cfg.lr);
  for (int m = 0; m < cfg.steps; ++m) {
    const Vec64 grad = inner_objective_grad(lambda, h, slots, inner_loss, cfg.ridge);
    Vec64 p = h.params();
    stepper.step(p, grad);
    h.set_params(std::move(p));
  }
  if (!all_finite(h.params())) {
    throw NonFiniteError("inner_opt: parameters diverged");
  }
  return inner_objective(inner_loss, lambda, h, slots, cfg.ridge);
}

AdjointReport adjoint_opt(const Vec64& lambda, Model& a, const Model& h,
                          const std::vector<const Sample*>& inner_flat,
                          const std::vector<const Sample*>& outer_flat,
                          const PointwiseLoss& inner_loss,
                          const PointwiseLoss& outer_loss,
                          const AdjointConfig& cfg) {
  if (inner_flat.empty() || outer_flat.empty()) {
    throw Error("adjoint_opt: empty batch");
  }
  if (cfg.steps < 0) throw Error("adjoint_opt: negative step count");
  const AdjointData data = precompute_adjoint_data(
      lambda, h, inner_flat, outer_flat, inner_loss, outer_loss);
  Stepper stepper(cfg.optimizer, cfg.lr);
  for (int k = 0; k < cfg.steps; ++k) {
    const Vec64 grad = adjoint_grad(a, inner_flat, outer_flat, data, cfg.ridge);
    Vec64 p = a.params();
    stepper.step(p, grad);
    a.set_params(std::move(p));
  }
  if (!all_finite(a.params())) {
    throw NonFiniteError("adjoint_opt: parameters diverged");
  }
  AdjointReport rep;
  rep.final_loss = adjoint_value(a, inner_flat, outer_flat, data, cfg.ridge);
  rep.grad_norm =
      norm2(adjoint_grad(a, inner_flat, outer_flat, data, cfg.ridge));
  rep.curvature_warning = data.curvature_warning;
  return rep;
}

Hypergrad func_grad(const Vec64& lambda, Model& h, Model& a,
                    const RoundData& data, const PointwiseLoss& inner_loss,
                    const PointwiseLoss& outer_loss, const InnerConfig& inner_cfg,
                    const AdjointConfig& adjoint_cfg, double subsample_fraction,
                    Rng& rng) {
  if (data.outer.empty()) throw Error("func_grad: empty outer batch");
  require_slots(data.inner, "func_grad");

  Hypergrad out;
  out.inner_final_loss = inner_opt(lambda, h, data.inner, inner_loss, inner_cfg);
  out.inner_err_proxy = norm2(
      inner_objective_grad(lambda, h, data.inner, inner_loss, inner_cfg.ridge));

  std::vector<const Sample*> inner_flat = flatten_slots(data.inner);
  std::vector<const Sample*> outer_flat;
  outer_flat.reserve(data.outer.size());
  for (const Sample& s : data.outer) outer_flat.push_back(&s);
  if (subsample_fraction < 1.0) {
    inner_flat = subsample(std::move(inner_flat), subsample_fraction, rng);
    outer_flat = subsample(std::move(outer_flat), subsample_fraction, rng);
  }

  const AdjointReport rep = adjoint_opt(lambda, a, h, inner_flat, outer_flat,
                                        inner_loss, outer_loss, adjoint_cfg);
  out.adjoint_final_loss = rep.final_loss;
  out.adjoint_err_proxy = rep.grad_norm;
  out.curvature_warning = rep.curvature_warning;

  const Assembled asm_out = assemble(lambda, h, a, inner_flat, outer_flat,
                                     inner_loss, outer_loss);
  out.g_exp = asm_out.g_exp;
  out.g_imp = asm_out.g_imp;
  out.total = add(out.g_exp, out.g_imp);
  return out;
}

void exact_inner_solve(const Vec64& lambda, LinearModel& h,
                       const std::vector<std::vector<Sample>>& slots,
                       const PointwiseLoss& inner_loss, double ridge) {
  require_slots(slots, "exact_inner_solve");
  const std::size_t p = h.feature_dim();
  Mat64 normal(p, p);
  for (std::size_t i = 0; i < p; ++i) normal(i, i) = ridge;
  Vec64 rhs(p, 0.0);
  const Vec64 v0(1, 0.0);
  for (const auto& batch : slots) {
    const double scale = 1.0 / static_cast<double>(batch.size());
    for (const Sample& smp : batch) {
      const Vec64 phi = h.features(smp.x);
      const Mat64 hess = inner_loss.d2_v(lambda, v0, smp);
      const Vec64 g0 = inner_loss.d_v(lambda, v0, smp);
      add_outer_inplace(normal, phi, phi, scale * hess(0, 0));
      axpy_inplace(rhs, -scale * g0[0], phi);
    }
  }
  h.set_params(solve_lu(std::move(normal), std::move(rhs)));
}

void exact_adjoint_solve(const Vec64& lambda, LinearModel& a,
                         const LinearModel& h,
                         const std::vector<const Sample*>& inner_flat,
                         const std::vector<const Sample*>& outer_flat,
                         const PointwiseLoss& inner_loss,
                         const PointwiseLoss& outer_loss, double ridge_adj) {
  if (inner_flat.empty() || outer_flat.empty()) {
    throw Error("exact_adjoint_solve: empty batch");
  }
  const std::size_t p = a.feature_dim();
  Mat64 curv(p, p);
  for (std::size_t i = 0; i < p; ++i) curv(i, i) = ridge_adj;
  const double in_scale = 1.0 / static_cast<double>(inner_flat.size());
  for (const Sample* s : inner_flat) {
    const Vec64 phi = a.features(s->x);
    const Mat64 hess = inner_loss.d2_v(lambda, h.predict(s->x), *s);
    add_outer_inplace(curv, phi, phi, in_scale * hess(0, 0));
  }
  Vec64 d(p, 0.0);
  const double out_scale = 1.0 / static_cast<double>(outer_flat.size());
  for (const Sample* s : outer_flat) {
    const Vec64 g = outer_loss.d_v(lambda, h.predict(s->x), *s);
    axpy_inplace(d, out_scale * g[0], a.features(s->x));
  }
  a.set_params(solve_lu(std::move(curv), scaled(d, -1.0)));
}

Hypergrad exact_func_grad(const Vec64& lambda, LinearModel& h, LinearModel& a,
                          const RoundData& data,
                          const PointwiseLoss& inner_loss,
                          const PointwiseLoss& outer_loss, double inner_ridge) {
  require_slots(data.inner, "exact_func_grad");
  if (data.outer.empty()) throw Error("exact_func_grad: empty outer batch");
  exact_inner_solve(lambda, h, data.inner, inner_loss, inner_ridge);

  const std::vector<const Sample*> inner_flat = flatten_slots(data.inner);
  std::vector<const Sample*> outer_flat;
  outer_flat.reserve(data.outer.size());
  for (const Sample& s : data.outer) outer_flat.push_back(&s);

  const double ridge_adj =
      inner_ridge / static_cast<double>(data.slot_count());
  exact_adjoint_solve(lambda, a, h, inner_flat, outer_flat, inner_loss,
                      outer_loss, ridge_adj);

  Hypergrad out;
  const Assembled asm_out = assemble(lambda, h, a, inner_flat, outer_flat,
                                     inner_loss, outer_loss);
  out.g_exp = asm_out.g_exp;
  out.g_imp = asm_out.g_imp;
  out.total = add(out.g_exp, out.g_imp);
  out.inner_final_loss =
      inner_objective(inner_loss, lambda, h, data.inner, inner_ridge);
  out.adjoint_final_loss = 0.0;
  out.inner_err_proxy = 0.0;
  out.adjoint_err_proxy = 0.0;
  return out;
}

Vec64 parametric_hypergrad(const Vec64& lambda, LinearModel& h,
                           const RoundData& data,
                           const PointwiseLoss& inner_loss,
                           const PointwiseLoss& outer_loss, double inner_ridge) {
  require_slots(data.inner, "parametric_hypergrad");
  if (data.outer.empty()) throw Error("parametric_hypergrad: empty outer batch");
  exact_inner_solve(lambda, h, data.inner, inner_loss, inner_ridge);

  const std::size_t p = h.feature_dim();
  const std::size_t k = lambda.size();
  Mat64 normal(p, p);
  for (std::size_t i = 0; i < p; ++i) normal(i, i) = inner_ridge;
  Mat64 cross_map(p, k);  // column s: d/d lambda_s of the inner theta-gradient
  const Vec64 v0(1, 0.0);
  for (const auto& batch : data.inner) {
    const double scale = 1.0 / static_cast<double>(batch.size());
    for (const Sample& smp : batch) {
      const Vec64 phi = h.features(smp.x);
      const Mat64 hess = inner_loss.d2_v(lambda, v0, smp);
      add_outer_inplace(normal, phi, phi, scale * hess(0, 0));
      const Mat64 cross = inner_loss.d2_lambda_v(lambda, h.predict(smp.x), smp);
      for (std::size_t s = 0; s < k; ++s) {
        const double c = scale * cross(s, 0);
        if (c == 0.0) continue;
        for (std::size_t r = 0; r < p; ++r) cross_map(r, s) += c * phi[r];
      }
    }
  }
  Vec64 g_theta(p, 0.0);
  Vec64 g_exp(k, 0.0);
  const double out_scale = 1.0 / static_cast<double>(data.outer.size());
  for (const Sample& smp : data.outer) {
    const Vec64 v = h.predict(smp.x);
    axpy_inplace(g_theta, out_scale * outer_loss.d_v(lambda, v, smp)[0],
                 h.features(smp.x));
    axpy_inplace(g_exp, out_scale, outer_loss.d_lambda(lambda, v, smp));
  }
  const Vec64 z = solve_lu(std::move(normal), g_theta);
  Vec64 total = g_exp;
  for (std::size_t s = 0; s < k; ++s) {
    double acc = 0.0;
    for (std::size_t r = 0; r < p; ++r) acc += cross_map(r, s) * z[r];
    total[s] -= acc;
  }
  return total;
}

}  // namespace smoothfbo
