#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smoothfbo/config.hpp"

namespace smoothfbo {

// <method>_w<w>_seed<seed>.csv; the probe sidecar adds a probe_ prefix.
// Summarization recovers (method, w, seed) from these names, so they are
// part of the output contract.
std::string ledger_filename(Method m, int w, std::uint64_t seed);
std::string probe_filename(Method m, int w, std::uint64_t seed);

struct CellResult {
  Method method = Method::kSmoothFbo;
  int w = 1;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::string ledger_path;  // empty when the cell failed
  double wall_ms = 0.0;
};

// Runs one (method, w, seed) cell of `base` and writes its ledger CSV (plus
// the probe sidecar when the run probed) under out_dir. Never throws for
// run failures; the error lands in the result.
CellResult run_cell(const ExperimentConfig& base, Method method, int w,
                    std::uint64_t seed, const std::string& out_dir);

struct GridOutcome {
  std::vector<CellResult> cells;  // method-major, then w, then seed
  std::string summary_path;
  std::string summary_csv;
  bool all_ok = true;
};

// Cross product methods x windows x seeds, running up to `parallelism`
// cells concurrently. Every ledger byte depends only on (config, cell), and
// the summary is recomputed from the written ledger files after all cells
// join, so any parallelism degree produces identical ledgers and summary.
// Cells that throw are recorded and excluded from the summary (fail-soft);
// a summary write failure propagates. fbo_w1 pins w = 1, so its cells are
// deduplicated across the window list. Wall-clock times go to a separate
// timings.csv, which is the one deliberately nondeterministic output.
GridOutcome run_grid(const GridSpec& grid, const std::string& out_dir,
                     int parallelism);

std::string summary_csv_header();

// Builds the summary table from ledger files named by ledger_filename.
// Per (method, w): seed count, seed-median of the final cumulative blr and
// final outer loss, percentile-bootstrap 95% interval of the blr median
// (1000 resamples, fixed seed), mean probe variance across seeds that have
// a sidecar (nan otherwise), and the inter-seed standard error of the blr
// final. Rows are ordered by method then w, independent of input order.
// An empty path list yields just the header.
std::string summarize_ledgers(const std::vector<std::string>& ledger_paths);

}  // namespace smoothfbo
