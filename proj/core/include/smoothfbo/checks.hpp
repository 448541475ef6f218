#pragma once

#include <string>
#include <vector>

namespace smoothfbo {

// One pass/fail verdict with a human-readable measurement. Tolerances live
// inside the check implementations, next to the quantities they gate.
struct CheckResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

std::string format_check_line(const CheckResult& r);

// Analytic and statistical checks (fast: seconds to ~2 minutes).
CheckResult check_two_point_oracle();       // 1
CheckResult check_linear_reduction();       // 2
CheckResult check_variance_law();           // 3
CheckResult check_tracking_bound();         // 4
CheckResult check_w1_equivalence();         // 7
CheckResult check_gradient_suite();         // 8

// Benchmark-grid checks. The grid (smoothfbo, w in {5, 50, 500}, seeds
// {1, 2, 3}, T = 1000) is run twice, sequentially and with 8 workers, into
// work_dir/grid_p1 and work_dir/grid_p8 (both wiped first).
struct AcceptanceGrid {
  std::string dir_seq;
  std::string dir_par;
  bool ok = false;
  std::string error;
};

AcceptanceGrid run_acceptance_grid(const std::string& work_dir);

CheckResult check_window_monotonicity(const AcceptanceGrid& grid);  // 5
CheckResult check_sublinearity(const AcceptanceGrid& grid);         // 6
CheckResult check_parallel_determinism(const AcceptanceGrid& grid); // 9

// The fast subset (1, 2, 3, 4, 7, 8), in criterion order.
std::vector<CheckResult> run_fast_checks();

// All nine criteria; grid outputs land under work_dir.
std::vector<CheckResult> run_all_checks(const std::string& work_dir);

}  // namespace smoothfbo
