#pragma once

#include "smoothfbo/dense.hpp"
#include "smoothfbo/drift.hpp"
#include "smoothfbo/mlp.hpp"

namespace smoothfbo {

struct UnrolledConfig {
  int steps = 5;
  double lr = 1e-4;
  double ridge = 0.0;
};

// Exact derivative with respect to lambda of the outer holdout loss after
// unrolling cfg.steps plain SGD steps of the windowed inner objective,
// starting from theta. Computed by forward-mode duals pushed through the
// whole unrolled computation (including the backward passes inside each SGD
// step), chunked over lambda coordinates, so there is no truncation error.
// theta is advanced in place to the unrolled endpoint (the warm start for
// the next round); the incoming warm start is treated as
// lambda-independent. Losses are the benchmark pair: slot-weighted squared
// error inside, plain squared error outside.
Vec64 unrolled_hypergrad(const MlpShape& shape, Vec64& theta,
                         const Vec64& lambda, const RoundData& data,
                         const UnrolledConfig& cfg);

}  // namespace smoothfbo
