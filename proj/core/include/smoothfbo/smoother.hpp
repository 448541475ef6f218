#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "smoothfbo/dense.hpp"
#include "smoothfbo/rng.hpp"

namespace smoothfbo {

// Ring buffer over the last `capacity` raw gradient estimates. The smoothed
// value is always sum/capacity: before warmup the missing history counts as
// zero, so early outputs are damped rather than averaged over fewer terms.
// Summation runs oldest to newest, which pins the floating-point result.
class HypergradWindow {
 public:
  HypergradWindow(int capacity, int dim);

  // Stores g (evicting the oldest entry once full) and returns the smoothed
  // estimate. Throws ShapeError on a dimension change and NonFiniteError on
  // inf/nan entries.
  Vec64 push_and_smooth(const Vec64& g);

  int capacity() const { return capacity_; }
  int dim() const { return dim_; }
  int size() const { return count_; }

 private:
  int capacity_;
  int dim_;
  int count_ = 0;
  int next_ = 0;
  std::vector<Vec64> ring_;
};

// Non-blr diagnostics attached to a ledger row. Fields that do not apply to
// a run mode stay nan and serialize as "nan".
struct RoundStats {
  double outer_loss = std::numeric_limits<double>::quiet_NaN();
  double g_exp_norm = std::numeric_limits<double>::quiet_NaN();
  double g_imp_norm = std::numeric_limits<double>::quiet_NaN();
  double inner_err_proxy = std::numeric_limits<double>::quiet_NaN();
  double adjoint_err_proxy = std::numeric_limits<double>::quiet_NaN();
};

struct LedgerRow {
  int t = 0;
  double blr_term = 0.0;
  double blr_cum = 0.0;
  RoundStats stats;
  double smoothed_norm = 0.0;
  Vec64 lambda;
  // Oracle-mode extras: squared norm of the noise-free smoothed gradient.
  double true_blr_term = std::numeric_limits<double>::quiet_NaN();
  double true_blr_cum = std::numeric_limits<double>::quiet_NaN();
};

// Append-only per-round record with running cumulative regret. Serializes to
// CSV with the fixed column order
//   t, blr_term, blr_cum, outer_loss, g_exp_norm, g_imp_norm, smoothed_norm,
//   inner_err_proxy, adjoint_err_proxy, lambda_0..lambda_{k-1}
// plus, when built with true columns (oracle mode), trailing
//   true_blr_term, true_blr_cum.
// Doubles are written in shortest round-trip form, so a CSV round trip is
// byte-exact.
class RegretLedger {
 public:
  RegretLedger(int lambda_dim, bool with_true_columns);

  // Appends the round-t row: blr_term = |smoothed|^2 added to the running
  // total. Rows must arrive with strictly increasing t.
  void blr_update(int t, const Vec64& smoothed, const RoundStats& stats,
                  const Vec64& lambda,
                  std::optional<double> true_term = std::nullopt);

  const std::vector<LedgerRow>& rows() const { return rows_; }
  int lambda_dim() const { return lambda_dim_; }
  bool with_true_columns() const { return with_true_; }
  double blr_total() const { return blr_cum_; }
  double true_blr_total() const { return true_cum_; }

  std::string to_csv() const;
  static RegretLedger from_csv(const std::string& text);
  static std::string csv_header(int lambda_dim, bool with_true_columns);

 private:
  int lambda_dim_;
  bool with_true_;
  std::vector<LedgerRow> rows_;
  double blr_cum_ = 0.0;
  double true_cum_ = 0.0;
};

struct VarianceProbeResult {
  Vec64 per_coordinate;   // unbiased sample variance per coordinate
  double mean_variance = 0.0;
  int replicates = 0;
  int window = 0;
};

// Monte Carlo variance of the smoothed estimator at a frozen state. The
// caller's raw_estimator must draw one raw estimate using only the passed
// stream (cloning any model state per call); replicate r averages w raw
// draws from streams root.fork("probe", r * w + i). Requires replicates >= 2.
VarianceProbeResult variance_probe(
    const std::function<Vec64(Rng&)>& raw_estimator, int dim, int w,
    int replicates, const Rng& root);

}  // namespace smoothfbo
