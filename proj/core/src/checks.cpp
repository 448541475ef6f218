#include "smoothfbo/checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>

#include "smoothfbo/csv.hpp"
#include "smoothfbo/errors.hpp"
#include "smoothfbo/runner.hpp"

namespace smoothfbo {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string ratio_list(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i > 0) out += ", ";
    out += num(xs[i]);
  }
  return out;
}

// Central finite difference of a scalar function of one vector argument.
template <class F>
Vec64 central_diff(const F& f, Vec64 x, double step) {
  Vec64 g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + step;
    const double hi = f(x);
    x[i] = saved - step;
    const double lo = f(x);
    x[i] = saved;
    g[i] = (hi - lo) / (2.0 * step);
  }
  return g;
}

double rel_vec_err(const Vec64& got, const Vec64& want, double floor) {
  return norm2(sub(got, want)) / std::max(norm2(want), floor);
}

}  // namespace

std::string format_check_line(const CheckResult& r) {
  return "criterion " + std::to_string(r.id) + " [" + r.name + "]: " +
         (r.pass ? "PASS" : "FAIL") + " - " + r.detail;
}

// --------------------------------------------------------------------------
// 1: the two-point weighted least-squares instance where the hypergradient
// is known in closed form.

CheckResult check_two_point_oracle() {
  CheckResult res{1, "two-point hypergradient oracle", false, ""};
  try {
    RoundData data;
    data.round = 1;
    data.inner = {{Sample{{1.0}, {1.0}, 0}}, {Sample{{2.0}, {3.0}, 1}}};
    data.outer = {Sample{{1.0}, {1.0}, 0}};
    const Vec64 lambda{1.0, 1.0};
    Mat64 eye(1, 1);
    eye(0, 0) = 1.0;
    const WeightedSquaredInnerLoss il;
    const SquaredOuterLoss ol;

    LinearModel h(eye, false), a(eye, false);
    const Hypergrad hg = exact_func_grad(lambda, h, a, data, il, ol, 0.0);
    const Vec64 expected{-0.064, 0.064};
    double abs_diff = 0.0;
    for (std::size_t i = 0; i < expected.size(); ++i) {
      abs_diff = std::max(abs_diff, std::abs(hg.total[i] - expected[i]));
    }

    const auto objective = [&](const Vec64& lam) {
      LinearModel hh(eye, false);
      exact_inner_solve(lam, hh, data.inner, il, 0.0);
      return empirical_loss(ol, lam, hh, data.outer);
    };
    const Vec64 fd = central_diff(objective, lambda, 1e-5);
    double fd_rel = 0.0;
    for (std::size_t i = 0; i < fd.size(); ++i) {
      fd_rel = std::max(fd_rel, std::abs(hg.total[i] - fd[i]) /
                                    std::max(std::abs(fd[i]), 1e-12));
    }

    res.pass = abs_diff <= 1e-9 && fd_rel <= 1e-4;
    res.detail = "max |est - (-0.064, 0.064)| = " + num(abs_diff) +
                 " (tol 1e-9); max rel err vs central diff = " + num(fd_rel) +
                 " (tol 1e-4)";
  } catch (const std::exception& e) {
    res.detail = std::string("exception: ") + e.what();
  }
  return res;
}

// --------------------------------------------------------------------------
// 2: adjoint-route and parameter-route exact hypergradients agree on random
// linear instances.

CheckResult check_linear_reduction() {
  CheckResult res{2, "functional vs parametric reduction", false, ""};
  try {
    const WeightedSquaredInnerLoss il;
    const SquaredOuterLoss ol;
    const Rng root(20240915);
    double worst = 0.0;
    for (int inst = 0; inst < 100; ++inst) {
      Rng rng = root.fork("instance", inst);
      const int in_dim = 2 + static_cast<int>(rng.next_u64() % 3);
      const int feat_rows = 1 + static_cast<int>(rng.next_u64() % 3);
      const bool constant = (rng.next_u64() & 1) != 0;
      const int slots = 2 + static_cast<int>(rng.next_u64() % 3);
      const Mat64 phi = gaussian_matrix(rng, static_cast<std::size_t>(feat_rows),
                                        static_cast<std::size_t>(in_dim));
      LinearModel h(phi, constant), a(phi, constant);
      const int batch = static_cast<int>(h.feature_dim()) + 2;

      Vec64 lambda(static_cast<std::size_t>(slots));
      for (double& l : lambda) l = 0.2 + 1.8 * rng.uniform01();
      RoundData data;
      data.round = inst;
      data.inner.resize(static_cast<std::size_t>(slots));
      auto draw = [&](int slot) {
        std::vector<Sample> b(static_cast<std::size_t>(batch));
        for (Sample& s : b) {
          s.x.resize(static_cast<std::size_t>(in_dim));
          for (double& xi : s.x) xi = rng.gaussian();
          s.y = Vec64{rng.gaussian()};
          s.slot = slot;
        }
        return b;
      };
      for (int j = 0; j < slots; ++j) {
        data.inner[static_cast<std::size_t>(j)] = draw(j);
      }
      data.outer = draw(0);

      const ReductionCheck rc =
          linear_reduction_check(lambda, h, a, data, il, ol, 1e-3);
      worst = std::max(worst, rc.max_abs_diff);
    }
    res.pass = worst <= 1e-6;
    res.detail =
        "max route disagreement over 100 instances = " + num(worst) +
        " (tol 1e-6)";
  } catch (const std::exception& e) {
    res.detail = std::string("exception: ") + e.what();
  }
  return res;
}

// --------------------------------------------------------------------------
// 3: smoothing divides the per-coordinate variance by w.

CheckResult check_variance_law() {
  CheckResult res{3, "variance reduction by 1/w", false, ""};
  try {
    const int dim = 3;
    const int replicates = 10000;
    const Rng root(7);
    const auto raw = [dim](Rng& stream) {
      Vec64 g(static_cast<std::size_t>(dim));
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = 0.5 * static_cast<double>(i) + stream.gaussian();
      }
      return g;
    };
    double worst_rel = 0.0;
    std::vector<double> measured;
    for (int w : {1, 4, 16}) {
      const VarianceProbeResult pr =
          variance_probe(raw, dim, w, replicates, root.fork("w", w));
      const double target = 1.0 / static_cast<double>(w);
      worst_rel =
          std::max(worst_rel, std::abs(pr.mean_variance - target) / target);
      measured.push_back(pr.mean_variance * static_cast<double>(w));
    }
    res.pass = worst_rel <= 0.10;
    res.detail = "w * variance for w in {1,4,16}: " + ratio_list(measured) +
                 " (each within 10% of 1, worst off by " + num(worst_rel) +
                 ")";
  } catch (const std::exception& e) {
    res.detail = std::string("exception: ") + e.what();
  }
  return res;
}

// --------------------------------------------------------------------------
// 4: the tracking-error bound holds on the drifting quadratic, where every
// constant in the bound is exact.

CheckResult check_tracking_bound() {
  CheckResult res{4, "smoothed tracking bound", false, ""};
  try {
    ExperimentConfig defaults;
    const DriftingQuadratic quad = defaults.oracle_testbed();
    const int t_max = 2000;
    const double lipschitz = quad.lipschitz();
    const double q_bound = quad.objective_bound();
    const double variation = quad.variation_v1t(t_max);
    const double sigma_f = defaults.oracle_sigma_f;
    const HypergradOracle oracle = quad.oracle(sigma_f);

    bool all_hold = true;
    double worst_ratio = 0.0;
    for (int w : {1, 10, 100}) {
      const double bound = smoothed_tracking_bound(lipschitz, q_bound, sigma_f,
                                                   variation, t_max, w);
      for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        OracleRunConfig rc;
        rc.t_max = t_max;
        rc.w = w;
        rc.alpha = 1.0 / lipschitz;
        rc.lambda1 = Vec64(static_cast<std::size_t>(quad.dim), 1.0);
        rc.constraint = Constraint::kBox;
        rc.lo = quad.lo;
        rc.hi = quad.hi;
        rc.seed = seed;
        const RegretLedger ledger = run_oracle_mode(oracle, rc);
        const double measured = ledger.true_blr_total();
        all_hold = all_hold && measured <= bound;
        worst_ratio = std::max(worst_ratio, measured / bound);
      }
    }
    res.pass = all_hold;
    res.detail =
        "true smoothed regret <= bound in all 60 cells (w in {1,10,100} x 20 "
        "seeds); worst measured/bound = " +
        num(worst_ratio);
  } catch (const std::exception& e) {
    res.detail = std::string("exception: ") + e.what();
  }
  return res;
}

// --------------------------------------------------------------------------
// 7: with w = 1 the smoothing path is the raw baseline, bit for bit.

CheckResult check_w1_equivalence() {
  CheckResult res{7, "w=1 equals unsmoothed baseline", false, ""};
  try {
    ExperimentConfig base;
    base.t_max = 200;
    const BenchmarkProblem problem = base.make_problem();
    EstimationRunConfig smoothed = base.estimation_config(1);
    smoothed.w = 1;
    smoothed.smooth = true;
    EstimationRunConfig raw = smoothed;
    raw.smooth = false;
    const std::string csv_a =
        run_estimation_mode(problem, smoothed).ledger.to_csv();
    const std::string csv_b = run_estimation_mode(problem, raw).ledger.to_csv();
    res.pass = csv_a == csv_b;
    res.detail = res.pass
                     ? "200-round ledgers byte-identical"
                     : "ledgers differ between w=1 smoothing and raw baseline";
  } catch (const std::exception& e) {
    res.detail = std::string("exception: ") + e.what();
  }
  return res;
}

// --------------------------------------------------------------------------
// 8: network backward pass against finite differences, plus every loss
// derivative identity under random inputs.

namespace {

double mlp_fd_rel_err(const MlpShape& shape, std::uint64_t seed) {
  const Rng root(seed);
  Vec64 params =
      init_network(InitSpec{InitSpec::Scheme::kFanInGaussian, 1.0, "p"},
                   shape.dims, shape.hidden_activation, root)
          .params();
  Rng xr = root.fork("x");
  Vec64 x(static_cast<std::size_t>(shape.input_dim()));
  for (double& xi : x) xi = xr.gaussian();
  Vec64 out_grad(static_cast<std::size_t>(shape.output_dim()));
  for (double& g : out_grad) g = 1.0 + xr.uniform01();

  GradTape tape(shape);
  mlp_forward(shape, params, x, &tape);
  const Vec64 grad = mlp_backward(shape, params, tape, out_grad);

  const auto f = [&](const Vec64& p) {
    const Vec64 v = mlp_forward(shape, p, x);
    return dot(out_grad, v);
  };
  const Vec64 fd = central_diff(f, params, 1e-6);
  return rel_vec_err(grad, fd, 1e-8);
}

struct LossCheckStats {
  double worst = 0.0;
  void update(double err) { worst = std::max(worst, err); }
};

double loss_identity_worst(const PointwiseLoss& loss, std::uint64_t seed) {
  Rng rng(seed);
  LossCheckStats st;
  for (int trial = 0; trial < 1000; ++trial) {
    const int vdim = 1 + static_cast<int>(rng.next_u64() % 3);
    const int ldim = 2 + static_cast<int>(rng.next_u64() % 3);
    Sample s;
    s.slot = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(ldim));
    s.x = Vec64{rng.gaussian()};
    s.y.resize(static_cast<std::size_t>(vdim));
    for (double& yi : s.y) yi = rng.gaussian();
    Vec64 v(static_cast<std::size_t>(vdim));
    for (double& vi : v) vi = rng.gaussian();
    Vec64 lambda(static_cast<std::size_t>(ldim));
    for (double& li : lambda) li = 0.1 + 2.0 * rng.uniform01();

    const double step = 1e-6;
    // d_v against the value
    const Vec64 dv = loss.d_v(lambda, v, s);
    const Vec64 dv_fd = central_diff(
        [&](const Vec64& vv) { return loss.value(lambda, vv, s); }, v, step);
    st.update(rel_vec_err(dv, dv_fd, 1e-6));
    // d_lambda against the value
    const Vec64 dl = loss.d_lambda(lambda, v, s);
    const Vec64 dl_fd = central_diff(
        [&](const Vec64& ll) { return loss.value(ll, v, s); }, lambda, step);
    st.update(rel_vec_err(dl, dl_fd, 1e-6));
    // d2_v: symmetry and column consistency with d_v
    const Mat64 h = loss.d2_v(lambda, v, s);
    double sym = 0.0;
    for (std::size_t r = 0; r < h.rows; ++r) {
      for (std::size_t c = 0; c < h.cols; ++c) {
        sym = std::max(sym, std::abs(h(r, c) - h(c, r)));
      }
    }
    st.update(sym);
    Vec64 h_fd_flat, h_flat;
    for (std::size_t c = 0; c < static_cast<std::size_t>(vdim); ++c) {
      const Vec64 col_fd = central_diff(
          [&](const Vec64& vv) { return loss.d_v(lambda, vv, s)[c]; }, v, step);
      for (std::size_t r = 0; r < col_fd.size(); ++r) {
        h_fd_flat.push_back(col_fd[r]);
        h_flat.push_back(h(r, c));
      }
    }
    st.update(rel_vec_err(h_flat, h_fd_flat, 1e-6));
    // d2_lambda_v rows against the lambda-derivative of d_v
    const Mat64 cross = loss.d2_lambda_v(lambda, v, s);
    Vec64 cr_flat, cr_fd_flat;
    for (std::size_t c = 0; c < static_cast<std::size_t>(vdim); ++c) {
      const Vec64 row_fd = central_diff(
          [&](const Vec64& ll) { return loss.d_v(ll, v, s)[c]; }, lambda, step);
      for (std::size_t r = 0; r < row_fd.size(); ++r) {
        cr_fd_flat.push_back(row_fd[r]);
        cr_flat.push_back(cross(r, c));
      }
    }
    st.update(rel_vec_err(cr_flat, cr_fd_flat, 1e-6));
  }
  return st.worst;
}

}  // namespace

CheckResult check_gradient_suite() {
  CheckResult res{8, "gradient and loss-derivative suite", false, ""};
  try {
    ExperimentConfig defaults;
    std::vector<int> mlp_dims{defaults.data.input_dim};
    mlp_dims.insert(mlp_dims.end(), defaults.hidden.begin(),
                    defaults.hidden.end());
    mlp_dims.push_back(1);
    const std::vector<MlpShape> shapes{
        MlpShape{mlp_dims, Activation::kGelu},
        MlpShape{{defaults.data.input_dim, 1}, Activation::kIdentity},
    };
    double worst_net = 0.0;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
      worst_net = std::max(
          worst_net, mlp_fd_rel_err(shapes[i], 100 + static_cast<int>(i)));
    }

    const double worst_inner =
        loss_identity_worst(WeightedSquaredInnerLoss{}, 11);
    const double worst_outer = loss_identity_worst(SquaredOuterLoss{}, 12);
    const double worst_loss = std::max(worst_inner, worst_outer);

    res.pass = worst_net < 1e-5 && worst_loss < 1e-5;
    res.detail = "backward vs finite differences: worst rel err = " +
                 num(worst_net) +
                 " (tol 1e-5); loss identities over 1000 inputs each: worst "
                 "err = " +
                 num(worst_loss) + " (tol 1e-5)";
  } catch (const std::exception& e) {
    res.detail = std::string("exception: ") + e.what();
  }
  return res;
}

// --------------------------------------------------------------------------
// Grid-backed criteria.

AcceptanceGrid run_acceptance_grid(const std::string& work_dir) {
  AcceptanceGrid grid;
  grid.dir_seq = work_dir + "/grid_p1";
  grid.dir_par = work_dir + "/grid_p8";
  try {
    std::filesystem::remove_all(grid.dir_seq);
    std::filesystem::remove_all(grid.dir_par);
    GridSpec spec;
    spec.methods = {Method::kSmoothFbo};
    spec.windows = {5, 50, 500};
    spec.base = ExperimentConfig{};

    const GridOutcome seq = run_grid(spec, grid.dir_seq, 1);
    const GridOutcome par = run_grid(spec, grid.dir_par, 8);
    grid.ok = seq.all_ok && par.all_ok;
    if (!grid.ok) {
      for (const CellResult& c : seq.cells) {
        if (!c.ok) {
          grid.error = "cell " + ledger_filename(c.method, c.w, c.seed) +
                       ": " + c.error;
          break;
        }
      }
      for (const CellResult& c : par.cells) {
        if (!c.ok && grid.error.empty()) {
          grid.error = "cell " + ledger_filename(c.method, c.w, c.seed) +
                       ": " + c.error;
        }
      }
    }
  } catch (const std::exception& e) {
    grid.ok = false;
    grid.error = e.what();
  }
  return grid;
}

namespace {

std::map<int, double> blr_medians_from_summary(const std::string& dir) {
  const std::vector<std::string> lines =
      split(read_text_file(dir + "/summary.csv"), '\n');
  if (lines.empty() || lines[0] != summary_csv_header()) {
    throw Error("unexpected summary header in " + dir);
  }
  std::map<int, double> medians;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::vector<std::string> cells = split(lines[i], ',');
    if (cells[0] != to_string(Method::kSmoothFbo)) continue;
    medians[static_cast<int>(parse_long(cells[1]))] = parse_double(cells[3]);
  }
  return medians;
}

}  // namespace

CheckResult check_window_monotonicity(const AcceptanceGrid& grid) {
  CheckResult res{5, "regret falls as the window grows", false, ""};
  if (!grid.ok) {
    res.detail = "grid run failed: " + grid.error;
    return res;
  }
  try {
    const std::map<int, double> medians =
        blr_medians_from_summary(grid.dir_seq);
    const double b5 = medians.at(5);
    const double b50 = medians.at(50);
    const double b500 = medians.at(500);
    res.pass = b500 < b50 && b50 < b5;
    res.detail = "median cumulative blr at T=1000: w=5 -> " + num(b5) +
                 ", w=50 -> " + num(b50) + ", w=500 -> " + num(b500);
  } catch (const std::exception& e) {
    res.detail = std::string("exception: ") + e.what();
  }
  return res;
}

CheckResult check_sublinearity(const AcceptanceGrid& grid) {
  CheckResult res{6, "per-round regret flattens over time", false, ""};
  if (!grid.ok) {
    res.detail = "grid run failed: " + grid.error;
    return res;
  }
  try {
    std::vector<double> ratios;
    for (std::uint64_t seed : {1, 2, 3}) {
      const std::string path =
          grid.dir_seq + "/" +
          ledger_filename(Method::kSmoothFbo, 50, seed);
      const RegretLedger ledger = RegretLedger::from_csv(read_text_file(path));
      const int t_max = ledger.rows().back().t;
      const int quarter = t_max / 4;
      double first = 0.0, last = 0.0;
      int n_first = 0, n_last = 0;
      for (const LedgerRow& row : ledger.rows()) {
        if (row.t <= quarter) {
          first += row.blr_term;
          ++n_first;
        } else if (row.t > t_max - quarter) {
          last += row.blr_term;
          ++n_last;
        }
      }
      ratios.push_back((last / n_last) / (first / n_first));
    }
    std::vector<double> sorted = ratios;
    std::sort(sorted.begin(), sorted.end());
    const double median_ratio = sorted[sorted.size() / 2];
    res.pass = median_ratio <= 1.0 / 1.5;
    res.detail = "last-quarter / first-quarter mean blr increment per seed: " +
                 ratio_list(ratios) + "; median = " + num(median_ratio) +
                 " (tol <= " + num(1.0 / 1.5) + ")";
  } catch (const std::exception& e) {
    res.detail = std::string("exception: ") + e.what();
  }
  return res;
}

CheckResult check_parallel_determinism(const AcceptanceGrid& grid) {
  CheckResult res{9, "ledger bytes invariant to parallelism", false, ""};
  if (!grid.ok) {
    res.detail = "grid run failed: " + grid.error;
    return res;
  }
  try {
    int compared = 0;
    for (int w : {5, 50, 500}) {
      for (std::uint64_t seed : {1, 2, 3}) {
        const std::string name =
            ledger_filename(Method::kSmoothFbo, w, seed);
        if (read_text_file(grid.dir_seq + "/" + name) !=
            read_text_file(grid.dir_par + "/" + name)) {
          res.detail = "ledger " + name + " differs between parallel degrees";
          return res;
        }
        ++compared;
      }
    }
    if (read_text_file(grid.dir_seq + "/summary.csv") !=
        read_text_file(grid.dir_par + "/summary.csv")) {
      res.detail = "summary.csv differs between parallel degrees";
      return res;
    }
    res.pass = true;
    res.detail = std::to_string(compared) +
                 " ledgers plus the summary byte-identical between "
                 "--parallel 1 and --parallel 8";
  } catch (const std::exception& e) {
    res.detail = std::string("exception: ") + e.what();
  }
  return res;
}

std::vector<CheckResult> run_fast_checks() {
  return {
      check_two_point_oracle(), check_linear_reduction(),
      check_variance_law(),     check_tracking_bound(),
      check_w1_equivalence(),   check_gradient_suite(),
  };
}

std::vector<CheckResult> run_all_checks(const std::string& work_dir) {
  std::vector<CheckResult> out;
  out.push_back(check_two_point_oracle());
  out.push_back(check_linear_reduction());
  out.push_back(check_variance_law());
  out.push_back(check_tracking_bound());
  const AcceptanceGrid grid = run_acceptance_grid(work_dir);
  out.push_back(check_window_monotonicity(grid));
  out.push_back(check_sublinearity(grid));
  out.push_back(check_w1_equivalence());
  out.push_back(check_gradient_suite());
  out.push_back(check_parallel_determinism(grid));
  std::sort(out.begin(), out.end(),
            [](const CheckResult& a, const CheckResult& b) {
              return a.id < b.id;
            });
  return out;
}

}  // namespace smoothfbo
