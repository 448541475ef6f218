#include "smoothfbo/drift.hpp"

#include <cmath>

#include "smoothfbo/csv.hpp"
#include "smoothfbo/errors.hpp"

namespace smoothfbo {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

DriftSchedule::DriftSchedule(Kind kind, Vec64 w0, double b0, Vec64 direction)
    : kind_(kind), w0_(std::move(w0)), b0_(b0), direction_(std::move(direction)) {
  require_size(direction_, w0_.size() + 1, "drift direction");
  const double n = norm2(direction_);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error("drift direction must be a nonzero finite vector");
  }
  for (double& d : direction_) d /= n;
}

DriftSchedule DriftSchedule::sinusoidal(Vec64 w0, double b0, double beta,
                                        double omega, Vec64 direction) {
  DriftSchedule s(Kind::kSinusoidal, std::move(w0), b0, std::move(direction));
  s.beta_ = beta;
  s.omega_ = omega;
  return s;
}

DriftSchedule DriftSchedule::jump(Vec64 w0, double b0, int interval,
                                  double magnitude, Vec64 direction) {
  if (interval < 1) throw Error("jump interval must be >= 1");
  DriftSchedule s(Kind::kJump, std::move(w0), b0, std::move(direction));
  s.interval_ = interval;
  s.magnitude_ = magnitude;
  return s;
}

TruthParams DriftSchedule::truth_params(int t) const {
  if (t < 0) throw Error("truth_params: negative time");
  double shift = 0.0;
  if (kind_ == Kind::kSinusoidal) {
    shift = beta_ * std::sin(omega_ * static_cast<double>(t));
  } else {
    shift = magnitude_ * static_cast<double>(t / interval_);
  }
  TruthParams p;
  p.w.resize(w0_.size());
  for (std::size_t i = 0; i < w0_.size(); ++i) {
    p.w[i] = w0_[i] + shift * direction_[i];
  }
  p.b = b0_ + shift * direction_.back();
  return p;
}

double DriftSchedule::truth_value(int t, const Vec64& x) const {
  const TruthParams p = truth_params(t);
  return sigmoid(dot(p.w, x) + p.b);
}

std::size_t RoundData::inner_total() const {
  std::size_t n = 0;
  for (const auto& batch : inner) n += batch.size();
  return n;
}

namespace {

std::vector<Sample> draw_batch(const DriftSchedule& schedule, Rng& rng,
                               int source_t, int slot, const DgpConfig& cfg) {
  const TruthParams p = schedule.truth_params(source_t);
  std::vector<Sample> batch(static_cast<std::size_t>(cfg.batch));
  for (Sample& s : batch) {
    s.x.resize(static_cast<std::size_t>(cfg.input_dim));
    for (double& xi : s.x) xi = rng.gaussian();
    const double f = sigmoid(dot(p.w, s.x) + p.b);
    s.y = Vec64{f + cfg.noise_std * rng.gaussian()};
    s.slot = slot;
  }
  return batch;
}

void check_dgp(const DriftSchedule& schedule, int t, const DgpConfig& cfg) {
  if (t < 0) throw Error("sample_round: negative round");
  if (cfg.batch < 1 || cfg.window < 1 || cfg.input_dim < 1) {
    throw Error("sample_round: batch, window and input_dim must be >= 1");
  }
  if (cfg.input_dim != schedule.input_dim()) {
    throw ShapeError("sample_round: config input_dim " +
                     std::to_string(cfg.input_dim) + " vs schedule dim " +
                     std::to_string(schedule.input_dim()));
  }
}

}  // namespace

RoundData sample_round(const DriftSchedule& schedule, const Rng& root, int t,
                       const DgpConfig& cfg) {
  check_dgp(schedule, t, cfg);
  RoundData rd;
  rd.round = t;
  rd.inner.resize(static_cast<std::size_t>(cfg.window));
  for (int j = 0; j < cfg.window; ++j) {
    const int source = std::max(t - cfg.window + j, 0);
    Rng rng = root.fork("dgp-batch", static_cast<std::uint64_t>(source));
    rd.inner[static_cast<std::size_t>(j)] = draw_batch(schedule, rng, source, j, cfg);
  }
  Rng rng = root.fork("dgp-holdout", static_cast<std::uint64_t>(t));
  rd.outer = draw_batch(schedule, rng, t, 0, cfg);
  return rd;
}

RoundData sample_round_fresh(const DriftSchedule& schedule, Rng& stream, int t,
                             const DgpConfig& cfg) {
  check_dgp(schedule, t, cfg);
  RoundData rd;
  rd.round = t;
  rd.inner.resize(static_cast<std::size_t>(cfg.window));
  for (int j = 0; j < cfg.window; ++j) {
    const int source = std::max(t - cfg.window + j, 0);
    rd.inner[static_cast<std::size_t>(j)] = draw_batch(schedule, stream, source, j, cfg);
  }
  rd.outer = draw_batch(schedule, stream, t, 0, cfg);
  return rd;
}

Vec64 drift_direction(std::uint64_t seed, int dim) {
  if (dim < 1) throw Error("drift_direction: dim must be >= 1");
  Rng rng = Rng(seed).fork("drift-direction");
  Vec64 dir(static_cast<std::size_t>(dim));
  double n = 0.0;
  // rejection on near-zero draws keeps the normalization well defined
  do {
    for (double& d : dir) d = rng.gaussian();
    n = norm2(dir);
  } while (n < 1e-12);
  for (double& d : dir) d /= n;
  return dir;
}

std::string truth_trajectory_csv(const DriftSchedule& schedule, int t_begin,
                                 int t_end) {
  std::string out = "t";
  for (int i = 0; i < schedule.input_dim(); ++i) {
    out += ",w_" + std::to_string(i);
  }
  out += ",b\n";
  for (int t = t_begin; t < t_end; ++t) {
    const TruthParams p = schedule.truth_params(t);
    out += std::to_string(t);
    for (double wi : p.w) {
      out += ',';
      out += format_double(wi);
    }
    out += ',';
    out += format_double(p.b);
    out += '\n';
  }
  return out;
}

}  // namespace smoothfbo
