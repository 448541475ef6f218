#include "smoothfbo/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <thread>
#include <tuple>
#include <utility>

#include "smoothfbo/csv.hpp"
#include "smoothfbo/errors.hpp"

namespace smoothfbo {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string cell_stem(Method m, int w, std::uint64_t seed) {
  return to_string(m) + "_w" + std::to_string(w) + "_seed" +
         std::to_string(seed);
}

std::string probes_to_csv(const std::vector<ProbeRecord>& probes) {
  const std::size_t k = probes.front().result.per_coordinate.size();
  std::vector<std::string> cells{"t", "window", "replicates", "mean_variance"};
  for (std::size_t i = 0; i < k; ++i) {
    cells.push_back("var_" + std::to_string(i));
  }
  std::string out = join(cells, ',') + "\n";
  for (const ProbeRecord& p : probes) {
    cells.clear();
    cells.push_back(std::to_string(p.t));
    cells.push_back(std::to_string(p.result.window));
    cells.push_back(std::to_string(p.result.replicates));
    cells.push_back(format_double(p.result.mean_variance));
    for (double v : p.result.per_coordinate) cells.push_back(format_double(v));
    out += join(cells, ',') + "\n";
  }
  return out;
}

}  // namespace

std::string ledger_filename(Method m, int w, std::uint64_t seed) {
  return cell_stem(m, w, seed) + ".csv";
}

std::string probe_filename(Method m, int w, std::uint64_t seed) {
  return "probe_" + cell_stem(m, w, seed) + ".csv";
}

CellResult run_cell(const ExperimentConfig& base, Method method, int w,
                    std::uint64_t seed, const std::string& out_dir) {
  CellResult res;
  res.method = method;
  res.w = method == Method::kFboW1 ? 1 : w;
  res.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    ExperimentConfig cfg = base;
    cfg.method = method;
    cfg.w = w;
    cfg.validate();

    std::string ledger_csv;
    std::string probe_csv;
    if (method == Method::kOracle) {
      const DriftingQuadratic quad = cfg.oracle_testbed();
      ledger_csv = run_oracle_mode(quad.oracle(cfg.oracle_sigma_f),
                                   cfg.oracle_config(seed))
                       .to_csv();
    } else {
      const BenchmarkProblem problem = cfg.make_problem();
      const EstimationRunConfig rc = cfg.estimation_config(seed);
      const EstimationResult er = method == Method::kUnrolled
                                      ? run_unrolled_mode(problem, rc)
                                      : run_estimation_mode(problem, rc);
      ledger_csv = er.ledger.to_csv();
      if (!er.probes.empty()) probe_csv = probes_to_csv(er.probes);
    }

    const std::string path =
        out_dir + "/" + ledger_filename(method, res.w, seed);
    write_text_file(path, ledger_csv);
    if (!probe_csv.empty()) {
      write_text_file(out_dir + "/" + probe_filename(method, res.w, seed),
                      probe_csv);
    }
    res.ledger_path = path;
    res.ok = true;
  } catch (const std::exception& e) {
    res.ok = false;
    res.error = e.what();
  }
  res.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return res;
}

GridOutcome run_grid(const GridSpec& grid, const std::string& out_dir,
                     int parallelism) {
  if (parallelism < 1) throw Error("run_grid: parallelism must be >= 1");
  if (grid.methods.empty() || grid.windows.empty()) {
    throw Error("run_grid: empty method or window list");
  }

  struct Cell {
    Method m;
    int w;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (Method m : grid.methods) {
    std::vector<int> ws = grid.windows;
    if (m == Method::kFboW1) ws = {1};
    for (int w : ws) {
      for (std::uint64_t seed : grid.base.seeds) cells.push_back({m, w, seed});
    }
  }

  GridOutcome out;
  out.cells.resize(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      out.cells[i] =
          run_cell(grid.base, cells[i].m, cells[i].w, cells[i].seed, out_dir);
    }
  };
  const std::size_t n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(parallelism),
                            cells.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }

  std::vector<std::string> ok_paths;
  for (const CellResult& c : out.cells) {
    if (c.ok) {
      ok_paths.push_back(c.ledger_path);
    } else {
      out.all_ok = false;
    }
  }
  out.summary_csv = summarize_ledgers(ok_paths);
  out.summary_path = out_dir + "/summary.csv";
  write_text_file(out.summary_path, out.summary_csv);

  std::string timings = "method,w,seed,wall_ms\n";
  for (const CellResult& c : out.cells) {
    timings += to_string(c.method) + "," + std::to_string(c.w) + "," +
               std::to_string(c.seed) + "," + format_double(c.wall_ms) + "\n";
  }
  write_text_file(out_dir + "/timings.csv", timings);
  return out;
}

std::string summary_csv_header() {
  return "method,w,n_seeds,blr_final_median,blr_final_lo95,blr_final_hi95,"
         "loss_final_median,variance_probe_mean,blr_final_stderr";
}

namespace {

struct SeedPoint {
  std::uint64_t seed = 0;
  double blr_final = 0.0;
  double loss_final = 0.0;
  double probe_mean = kNan;
};

struct ParsedName {
  Method method;
  int w;
  std::uint64_t seed;
};

ParsedName parse_ledger_name(const std::string& path) {
  const std::string stem = std::filesystem::path(path).filename().string();
  const std::size_t wpos = stem.rfind("_w");
  const std::size_t spos = stem.rfind("_seed");
  const std::size_t ext = stem.rfind(".csv");
  if (wpos == std::string::npos || spos == std::string::npos ||
      ext == std::string::npos || !(wpos < spos && spos < ext)) {
    throw Error("ledger path '" + path +
                "' does not follow <method>_w<w>_seed<seed>.csv");
  }
  ParsedName out{};
  out.method = method_from_string(stem.substr(0, wpos));
  out.w = static_cast<int>(parse_long(stem.substr(wpos + 2, spos - wpos - 2)));
  out.seed = static_cast<std::uint64_t>(
      parse_long(stem.substr(spos + 5, ext - spos - 5)));
  return out;
}

double probe_mean_from_sidecar(const std::string& ledger_path,
                               const ParsedName& name) {
  const std::filesystem::path sidecar =
      std::filesystem::path(ledger_path).parent_path() /
      probe_filename(name.method, name.w, name.seed);
  if (!std::filesystem::exists(sidecar)) return kNan;
  const std::vector<std::string> lines =
      split(read_text_file(sidecar.string()), '\n');
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::vector<std::string> cells = split(lines[i], ',');
    if (cells.size() < 4) throw Error("probe sidecar row too short");
    sum += parse_double(cells[3]);
    ++n;
  }
  return n > 0 ? sum / n : kNan;
}

double median_of(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

// Percentile bootstrap of the median: 1000 resamples from a stream keyed
// only by the cell label, so the interval does not depend on grid layout or
// call order.
std::pair<double, double> bootstrap_median_ci(const std::vector<double>& xs,
                                              const std::string& cell_label) {
  constexpr int kResamples = 1000;
  Rng rng = Rng(0x5eedb007).fork(cell_label);
  const std::size_t n = xs.size();
  std::vector<double> medians;
  medians.reserve(kResamples);
  std::vector<double> draw(n);
  for (int b = 0; b < kResamples; ++b) {
    for (std::size_t j = 0; j < n; ++j) {
      std::size_t idx = static_cast<std::size_t>(rng.uniform01() *
                                                 static_cast<double>(n));
      if (idx >= n) idx = n - 1;
      draw[j] = xs[idx];
    }
    medians.push_back(median_of(draw));
  }
  std::sort(medians.begin(), medians.end());
  const auto rank = [&](double q) {
    return static_cast<std::size_t>(
        std::lround(q * static_cast<double>(kResamples - 1)));
  };
  return {medians[rank(0.025)], medians[rank(0.975)]};
}

double stderr_of(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(n - 1)) /
         std::sqrt(static_cast<double>(n));
}

}  // namespace

std::string summarize_ledgers(const std::vector<std::string>& ledger_paths) {
  std::map<std::pair<int, int>, std::vector<SeedPoint>> groups;
  for (const std::string& path : ledger_paths) {
    const ParsedName name = parse_ledger_name(path);
    const RegretLedger ledger = RegretLedger::from_csv(read_text_file(path));
    if (ledger.rows().empty()) {
      throw Error("ledger '" + path + "' has no rows");
    }
    SeedPoint pt;
    pt.seed = name.seed;
    pt.blr_final = ledger.rows().back().blr_cum;
    pt.loss_final = ledger.rows().back().stats.outer_loss;
    pt.probe_mean = probe_mean_from_sidecar(path, name);
    groups[{static_cast<int>(name.method), name.w}].push_back(pt);
  }

  std::string out = summary_csv_header() + "\n";
  for (auto& [key, pts] : groups) {
    std::sort(pts.begin(), pts.end(),
              [](const SeedPoint& a, const SeedPoint& b) {
                return a.seed < b.seed;
              });
    const Method method = static_cast<Method>(key.first);
    std::vector<double> blr, loss;
    double probe_sum = 0.0;
    int probe_n = 0;
    for (const SeedPoint& p : pts) {
      blr.push_back(p.blr_final);
      loss.push_back(p.loss_final);
      if (!std::isnan(p.probe_mean)) {
        probe_sum += p.probe_mean;
        ++probe_n;
      }
    }
    const std::string label = to_string(method) + "_w" +
                              std::to_string(key.second);
    const auto [lo95, hi95] = bootstrap_median_ci(blr, label);
    const std::vector<std::string> cells{
        to_string(method),
        std::to_string(key.second),
        std::to_string(pts.size()),
        format_double(median_of(blr)),
        format_double(lo95),
        format_double(hi95),
        format_double(median_of(loss)),
        format_double(probe_n > 0 ? probe_sum / probe_n : kNan),
        format_double(stderr_of(blr)),
    };
    out += join(cells, ',') + "\n";
  }
  return out;
}

}  // namespace smoothfbo
