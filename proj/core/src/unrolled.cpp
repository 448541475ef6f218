#include "smoothfbo/unrolled.hpp"

#include <algorithm>
#include <cmath>

#include "smoothfbo/dual.hpp"
#include "smoothfbo/errors.hpp"

namespace smoothfbo {

Vec64 unrolled_hypergrad(const MlpShape& shape, Vec64& theta,
                         const Vec64& lambda, const RoundData& data,
                         const UnrolledConfig& cfg) {
  shape.validate();
  require_size(theta, shape.param_count(), "unrolled theta");
  if (shape.output_dim() != 1) {
    throw ShapeError("unrolled_hypergrad: scalar-output networks only");
  }
  if (data.inner.empty() || data.outer.empty()) {
    throw Error("unrolled_hypergrad: round data missing batches");
  }
  for (const auto& batch : data.inner) {
    if (batch.empty()) throw Error("unrolled_hypergrad: empty slot batch");
  }
  if (cfg.steps < 0) throw Error("unrolled_hypergrad: negative step count");

  const int k = static_cast<int>(lambda.size());
  const std::size_t n_params = shape.param_count();
  Vec64 total(static_cast<std::size_t>(k), 0.0);
  Vec64 theta_end = theta;

  std::vector<Dual> th(n_params);
  std::vector<Dual> grad(n_params);
  std::vector<Dual> xd;
  ForwardCache<Dual> cache;
  Dual out;
  Dual out_grad;

  for (int chunk = 0; chunk < k; chunk += kDualWidth) {
    const int lanes = std::min(kDualWidth, k - chunk);
    std::vector<Dual> lam(lambda.size());
    for (int s = 0; s < k; ++s) {
      lam[static_cast<std::size_t>(s)] = Dual(lambda[static_cast<std::size_t>(s)]);
      if (s >= chunk && s < chunk + lanes) {
        lam[static_cast<std::size_t>(s)].d[static_cast<std::size_t>(s - chunk)] = 1.0;
      }
    }
    for (std::size_t i = 0; i < n_params; ++i) th[i] = Dual(theta[i]);

    for (int m = 0; m < cfg.steps; ++m) {
      std::fill(grad.begin(), grad.end(), Dual(0.0));
      for (const auto& batch : data.inner) {
        const Dual scale(1.0 / static_cast<double>(batch.size()));
        for (const Sample& smp : batch) {
          xd.assign(smp.x.begin(), smp.x.end());
          mlp_forward_core<Dual>(shape, th.data(), xd.data(), &cache, &out);
          out_grad = 2.0 * lam[static_cast<std::size_t>(smp.slot)] *
                     (out - smp.y[0]);
          mlp_backward_core<Dual>(shape, th.data(), cache, &out_grad, scale,
                                  grad.data());
        }
      }
      if (cfg.ridge != 0.0) {
        for (std::size_t i = 0; i < n_params; ++i) {
          grad[i] += cfg.ridge * th[i];
        }
      }
      for (std::size_t i = 0; i < n_params; ++i) {
        th[i] -= cfg.lr * grad[i];
        if (!std::isfinite(th[i].v)) {
          throw NonFiniteError("unrolled_hypergrad: iterates diverged at step " +
                               std::to_string(m));
        }
      }
    }

    Dual loss(0.0);
    const Dual out_scale(1.0 / static_cast<double>(data.outer.size()));
    for (const Sample& smp : data.outer) {
      xd.assign(smp.x.begin(), smp.x.end());
      mlp_forward_core<Dual>(shape, th.data(), xd.data(), &cache, &out);
      const Dual r = out - smp.y[0];
      loss += out_scale * r * r;
    }
    for (int lane = 0; lane < lanes; ++lane) {
      total[static_cast<std::size_t>(chunk + lane)] =
          loss.d[static_cast<std::size_t>(lane)];
    }
    if (chunk == 0) {
      for (std::size_t i = 0; i < n_params; ++i) theta_end[i] = th[i].v;
    }
  }
  theta = std::move(theta_end);
  return total;
}

}  // namespace smoothfbo
