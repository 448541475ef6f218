#include "smoothfbo/smoother.hpp"

#include <cmath>

#include "smoothfbo/csv.hpp"
#include "smoothfbo/errors.hpp"

namespace smoothfbo {

HypergradWindow::HypergradWindow(int capacity, int dim)
    : capacity_(capacity), dim_(dim) {
  if (capacity < 1) throw Error("HypergradWindow: capacity must be >= 1");
  if (dim < 1) throw Error("HypergradWindow: dim must be >= 1");
  ring_.resize(static_cast<std::size_t>(capacity));
}

Vec64 HypergradWindow::push_and_smooth(const Vec64& g) {
  require_size(g, static_cast<std::size_t>(dim_), "HypergradWindow entry");
  if (!all_finite(g)) {
    throw NonFiniteError("HypergradWindow: non-finite gradient estimate");
  }
  ring_[static_cast<std::size_t>(next_)] = g;
  next_ = (next_ + 1) % capacity_;
  if (count_ < capacity_) ++count_;
  Vec64 sum(static_cast<std::size_t>(dim_), 0.0);
  const int start = (next_ - count_ + capacity_) % capacity_;
  for (int i = 0; i < count_; ++i) {
    const Vec64& e = ring_[static_cast<std::size_t>((start + i) % capacity_)];
    for (int c = 0; c < dim_; ++c) sum[static_cast<std::size_t>(c)] += e[static_cast<std::size_t>(c)];
  }
  const double inv = 1.0 / static_cast<double>(capacity_);
  for (double& s : sum) s *= inv;
  return sum;
}

RegretLedger::RegretLedger(int lambda_dim, bool with_true_columns)
    : lambda_dim_(lambda_dim), with_true_(with_true_columns) {
  if (lambda_dim < 1) throw Error("RegretLedger: lambda_dim must be >= 1");
}

void RegretLedger::blr_update(int t, const Vec64& smoothed,
                              const RoundStats& stats, const Vec64& lambda,
                              std::optional<double> true_term) {
  if (!rows_.empty() && t <= rows_.back().t) {
    throw Error("RegretLedger: round " + std::to_string(t) +
                " not after round " + std::to_string(rows_.back().t));
  }
  require_size(lambda, static_cast<std::size_t>(lambda_dim_), "ledger lambda");
  if (with_true_ != true_term.has_value()) {
    throw Error("RegretLedger: true-term presence must match ledger mode");
  }
  LedgerRow row;
  row.t = t;
  row.blr_term = norm2sq(smoothed);
  blr_cum_ += row.blr_term;
  row.blr_cum = blr_cum_;
  row.stats = stats;
  row.smoothed_norm = norm2(smoothed);
  row.lambda = lambda;
  if (true_term) {
    row.true_blr_term = *true_term;
    true_cum_ += *true_term;
    row.true_blr_cum = true_cum_;
  }
  rows_.push_back(std::move(row));
}

std::string RegretLedger::csv_header(int lambda_dim, bool with_true_columns) {
  std::string h =
      "t,blr_term,blr_cum,outer_loss,g_exp_norm,g_imp_norm,smoothed_norm,"
      "inner_err_proxy,adjoint_err_proxy";
  for (int i = 0; i < lambda_dim; ++i) h += ",lambda_" + std::to_string(i);
  if (with_true_columns) h += ",true_blr_term,true_blr_cum";
  return h;
}

std::string RegretLedger::to_csv() const {
  std::string out = csv_header(lambda_dim_, with_true_);
  out += '\n';
  for (const LedgerRow& r : rows_) {
    out += std::to_string(r.t);
    const double cells[] = {r.blr_term,          r.blr_cum,
                            r.stats.outer_loss,  r.stats.g_exp_norm,
                            r.stats.g_imp_norm,  r.smoothed_norm,
                            r.stats.inner_err_proxy, r.stats.adjoint_err_proxy};
    for (double c : cells) {
      out += ',';
      out += format_double(c);
    }
    for (double l : r.lambda) {
      out += ',';
      out += format_double(l);
    }
    if (with_true_) {
      out += ',';
      out += format_double(r.true_blr_term);
      out += ',';
      out += format_double(r.true_blr_cum);
    }
    out += '\n';
  }
  return out;
}

RegretLedger RegretLedger::from_csv(const std::string& text) {
  const std::vector<std::string> lines = split(text, '\n');
  if (lines.empty() || lines[0].empty()) {
    throw Error("RegretLedger::from_csv: missing header");
  }
  const std::vector<std::string> head = split(lines[0], ',');
  constexpr int kFixed = 9;
  int lambda_dim = 0;
  bool with_true = false;
  {
    int n = static_cast<int>(head.size());
    if (n >= kFixed + 3 && head[static_cast<std::size_t>(n) - 2] == "true_blr_term") {
      with_true = true;
      n -= 2;
    }
    lambda_dim = n - kFixed;
  }
  if (lambda_dim < 1 ||
      lines[0] != csv_header(lambda_dim, with_true)) {
    throw Error("RegretLedger::from_csv: unrecognized header '" + lines[0] + "'");
  }
  RegretLedger ledger(lambda_dim, with_true);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const std::vector<std::string> cells = split(lines[li], ',');
    const std::size_t want = static_cast<std::size_t>(kFixed) + lambda_dim +
                             (with_true ? 2 : 0);
    if (cells.size() != want) {
      throw Error("RegretLedger::from_csv: row " + std::to_string(li) +
                  " has " + std::to_string(cells.size()) + " cells, want " +
                  std::to_string(want));
    }
    LedgerRow r;
    r.t = static_cast<int>(parse_long(cells[0]));
    r.blr_term = parse_double(cells[1]);
    r.blr_cum = parse_double(cells[2]);
    r.stats.outer_loss = parse_double(cells[3]);
    r.stats.g_exp_norm = parse_double(cells[4]);
    r.stats.g_imp_norm = parse_double(cells[5]);
    r.smoothed_norm = parse_double(cells[6]);
    r.stats.inner_err_proxy = parse_double(cells[7]);
    r.stats.adjoint_err_proxy = parse_double(cells[8]);
    r.lambda.resize(static_cast<std::size_t>(lambda_dim));
    for (int i = 0; i < lambda_dim; ++i) {
      r.lambda[static_cast<std::size_t>(i)] =
          parse_double(cells[static_cast<std::size_t>(kFixed + i)]);
    }
    if (with_true) {
      r.true_blr_term = parse_double(cells[want - 2]);
      r.true_blr_cum = parse_double(cells[want - 1]);
    }
    ledger.blr_cum_ = r.blr_cum;
    if (with_true) ledger.true_cum_ = r.true_blr_cum;
    ledger.rows_.push_back(std::move(r));
  }
  return ledger;
}

VarianceProbeResult variance_probe(
    const std::function<Vec64(Rng&)>& raw_estimator, int dim, int w,
    int replicates, const Rng& root) {
  if (replicates < 2) throw Error("variance_probe: need >= 2 replicates");
  if (w < 1) throw Error("variance_probe: window must be >= 1");
  if (dim < 1) throw Error("variance_probe: dim must be >= 1");
  std::vector<Vec64> smoothed(static_cast<std::size_t>(replicates));
  const double inv_w = 1.0 / static_cast<double>(w);
  for (int r = 0; r < replicates; ++r) {
    Vec64 acc(static_cast<std::size_t>(dim), 0.0);
    for (int i = 0; i < w; ++i) {
      Rng stream = root.fork(
          "probe", static_cast<std::uint64_t>(r) * static_cast<std::uint64_t>(w) + i);
      const Vec64 g = raw_estimator(stream);
      require_size(g, static_cast<std::size_t>(dim), "variance_probe estimate");
      axpy_inplace(acc, 1.0, g);
    }
    smoothed[static_cast<std::size_t>(r)] = scaled(acc, inv_w);
  }
  Vec64 mean(static_cast<std::size_t>(dim), 0.0);
  for (const Vec64& s : smoothed) axpy_inplace(mean, 1.0, s);
  for (double& m : mean) m /= static_cast<double>(replicates);
  VarianceProbeResult out;
  out.per_coordinate.assign(static_cast<std::size_t>(dim), 0.0);
  for (const Vec64& s : smoothed) {
    for (int c = 0; c < dim; ++c) {
      const double d = s[static_cast<std::size_t>(c)] - mean[static_cast<std::size_t>(c)];
      out.per_coordinate[static_cast<std::size_t>(c)] += d * d;
    }
  }
  for (double& v : out.per_coordinate) {
    v /= static_cast<double>(replicates - 1);
  }
  double m = 0.0;
  for (double v : out.per_coordinate) m += v;
  out.mean_variance = m / static_cast<double>(dim);
  out.replicates = replicates;
  out.window = w;
  return out;
}

}  // namespace smoothfbo
