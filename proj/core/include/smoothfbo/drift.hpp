#pragma once

#include <string>
#include <vector>

#include "smoothfbo/dense.hpp"
#include "smoothfbo/losses.hpp"
#include "smoothfbo/rng.hpp"

namespace smoothfbo {

double sigmoid(double z);

// Ground-truth labeling parameters at one time step.
struct TruthParams {
  Vec64 w;
  double b = 0.0;
};

// Time path of the labeling function f_t(x) = sigmoid(w_t . x + b_t).
// Both kinds move the stacked vector (w, b) from its base along one fixed
// unit direction:
//   sinusoidal: base + beta * sin(omega * t) * direction
//   jump:       base + magnitude * floor(t / interval) * direction
// so a jump path is exactly constant (bit-equal) between jumps.
class DriftSchedule {
 public:
  static DriftSchedule sinusoidal(Vec64 w0, double b0, double beta,
                                  double omega, Vec64 direction);
  static DriftSchedule jump(Vec64 w0, double b0, int interval,
                            double magnitude, Vec64 direction);

  TruthParams truth_params(int t) const;
  double truth_value(int t, const Vec64& x) const;
  int input_dim() const { return static_cast<int>(w0_.size()); }

 private:
  enum class Kind { kSinusoidal, kJump };
  DriftSchedule(Kind kind, Vec64 w0, double b0, Vec64 direction);

  Kind kind_;
  Vec64 w0_;
  double b0_;
  Vec64 direction_;  // unit, length input_dim + 1 (last entry moves b)
  double beta_ = 0.0;
  double omega_ = 0.0;
  int interval_ = 1;
  double magnitude_ = 0.0;
};

// Batch geometry of one round: `window` reruns of size `batch`, plus a
// holdout batch of the same size from the current distribution.
struct DgpConfig {
  int input_dim = 8;
  int batch = 32;
  int window = 5;        // number of inner slots
  double noise_std = 0.05;

  bool operator==(const DgpConfig&) const = default;
};

// Data for one outer round. inner[j] is the batch whose weight is
// lambda[j]; slot j holds the stream batch of source time t - window + j
// (clamped at 0), so slot window-1 is the freshest. outer is the holdout
// batch from the round-t distribution, disjoint from every inner stream.
struct RoundData {
  int round = 0;
  std::vector<std::vector<Sample>> inner;
  std::vector<Sample> outer;

  int slot_count() const { return static_cast<int>(inner.size()); }
  std::size_t inner_total() const;
};

// Draws round t. The batch for source time s comes from
// root.fork("dgp-batch", s) and the holdout from root.fork("dgp-holdout", t),
// so the same (seed, t) always yields the identical RoundData and every
// round that references source time s sees the same batch, with no history
// kept anywhere.
RoundData sample_round(const DriftSchedule& schedule, const Rng& root, int t,
                       const DgpConfig& cfg);

// Like sample_round but drawing every batch from `stream` (consumed in
// place) instead of the keyed per-time streams. Each slot still samples its
// own source-time distribution; used for independent replicate draws.
RoundData sample_round_fresh(const DriftSchedule& schedule, Rng& stream, int t,
                             const DgpConfig& cfg);

// Unit direction of length dim, drawn deterministically from `seed`.
Vec64 drift_direction(std::uint64_t seed, int dim);

// t, w_0..w_{d-1}, b rows for t in [t_begin, t_end). Used to dump the truth
// trajectory behind a run.
std::string truth_trajectory_csv(const DriftSchedule& schedule, int t_begin,
                                 int t_end);

}  // namespace smoothfbo
