// Command line front end: run one cell family, sweep a grid, rebuild a
// summary from ledgers, or run the self-check suite.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "smoothfbo/checks.hpp"
#include "smoothfbo/config.hpp"
#include "smoothfbo/errors.hpp"
#include "smoothfbo/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCellFailure = 1;
constexpr int kExitConfigError = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw smoothfbo::ConfigError("cannot open config file '" + path + "'", 0,
                                 "config");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t pos = 0;
    unsigned long long v = std::stoull(item, &pos);
    if (pos != item.size()) {
      throw smoothfbo::ConfigError("bad seed '" + item + "'", 0, "seeds");
    }
    seeds.push_back(static_cast<std::uint64_t>(v));
  }
  if (seeds.empty()) {
    throw smoothfbo::ConfigError("empty seed list", 0, "seeds");
  }
  return seeds;
}

// Shared state filled by CLI11 before the subcommand body runs.
struct Options {
  std::string config_path;
  std::string out_dir;
  std::string seeds;
  int parallel = 1;
  int w = 0;  // 0 = keep the config value
  bool full = false;
  std::vector<std::string> ledgers;
};

// SMOOTHFBO_OUT wins over --out so wrapper scripts can redirect output
// without touching the command line.
std::string resolve_out(const std::string& flag_value,
                        const std::string& fallback) {
  if (const char* env = std::getenv("SMOOTHFBO_OUT"); env && *env) {
    return env;
  }
  return flag_value.empty() ? fallback : flag_value;
}

void apply_overrides(smoothfbo::ExperimentConfig& cfg, const Options& opt) {
  if (!opt.seeds.empty()) cfg.seeds = parse_seed_list(opt.seeds);
  if (opt.w > 0) cfg.w = opt.w;
  cfg.out_dir = resolve_out(opt.out_dir, cfg.out_dir);
}

int report_grid(const smoothfbo::GridOutcome& outcome,
                const std::string& out_dir) {
  int failed = 0;
  for (const auto& cell : outcome.cells) {
    if (cell.ok) {
      std::cout << "ok   " << smoothfbo::to_string(cell.method) << " w="
                << cell.w << " seed=" << cell.seed << " -> "
                << cell.ledger_path << "\n";
    } else {
      ++failed;
      std::cerr << "FAIL " << smoothfbo::to_string(cell.method) << " w="
                << cell.w << " seed=" << cell.seed << ": " << cell.error
                << "\n";
    }
  }
  std::cout << outcome.cells.size() - failed << "/" << outcome.cells.size()
            << " cells ok, summary: " << outcome.summary_path << "\n";
  (void)out_dir;
  return outcome.all_ok ? kExitOk : kExitCellFailure;
}

int cmd_run(const Options& opt) {
  smoothfbo::ExperimentConfig cfg;
  if (!opt.config_path.empty()) {
    cfg = smoothfbo::parse_config(read_file(opt.config_path));
  }
  apply_overrides(cfg, opt);
  cfg.validate();
  smoothfbo::GridSpec spec;
  spec.methods = {cfg.method};
  spec.windows = {cfg.w};
  spec.base = cfg;
  auto outcome = smoothfbo::run_grid(spec, cfg.out_dir, opt.parallel);
  return report_grid(outcome, cfg.out_dir);
}

int cmd_grid(const Options& opt) {
  smoothfbo::GridSpec spec;
  if (!opt.config_path.empty()) {
    spec = smoothfbo::parse_grid(read_file(opt.config_path));
  } else {
    spec.methods = {smoothfbo::Method::kSmoothFbo};
    spec.windows = {spec.base.w};
  }
  apply_overrides(spec.base, opt);
  if (opt.w > 0) spec.windows = {opt.w};
  spec.base.validate();
  auto outcome = smoothfbo::run_grid(spec, spec.base.out_dir, opt.parallel);
  return report_grid(outcome, spec.base.out_dir);
}

int cmd_summarize(const Options& opt) {
  std::string csv = smoothfbo::summarize_ledgers(opt.ledgers);
  std::string out = resolve_out(opt.out_dir, "");
  if (out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream f(out, std::ios::binary);
    if (!f) {
      std::cerr << "cannot write " << out << "\n";
      return kExitCellFailure;
    }
    f << csv;
    std::cout << "wrote " << out << "\n";
  }
  return kExitOk;
}

int cmd_check(const Options& opt) {
  std::string work = resolve_out(opt.out_dir, "acceptance_work");
  std::vector<smoothfbo::CheckResult> results =
      opt.full ? smoothfbo::run_all_checks(work)
               : smoothfbo::run_fast_checks();
  int passed = 0;
  for (const auto& r : results) {
    std::cout << smoothfbo::format_check_line(r) << "\n";
    if (r.pass) ++passed;
  }
  std::cout << passed << "/" << results.size() << " checks passed\n";
  return passed == static_cast<int>(results.size()) ? kExitOk
                                                    : kExitCellFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-smoothed functional bilevel optimization benchmarks"};
  app.require_subcommand(1);

  Options opt;

  auto add_common = [&opt](CLI::App* sub, bool with_config) {
    if (with_config) {
      sub->add_option("--config", opt.config_path,
                      "key = value config file (defaults when omitted)");
    }
    sub->add_option("--out", opt.out_dir,
                    "output directory (SMOOTHFBO_OUT overrides)");
    sub->add_option("--seeds", opt.seeds, "comma list, overrides config");
    sub->add_option("--parallel", opt.parallel, "max concurrent cells")
        ->check(CLI::PositiveNumber);
    sub->add_option("--w", opt.w, "window override")
        ->check(CLI::PositiveNumber);
  };

  CLI::App* run = app.add_subcommand("run", "run one configured cell family");
  add_common(run, true);

  CLI::App* grid =
      app.add_subcommand("grid", "run a method x window x seed grid");
  add_common(grid, true);

  CLI::App* summarize = app.add_subcommand(
      "summarize", "rebuild the summary table from ledger CSVs");
  summarize->add_option("ledgers", opt.ledgers, "ledger CSV files")
      ->required();
  summarize->add_option("--out", opt.out_dir,
                        "summary file (stdout when omitted)");

  CLI::App* check =
      app.add_subcommand("check", "run the analytic self-check suite");
  check->add_flag("--full", opt.full,
                  "include the benchmark-grid criteria (slow)");
  check->add_option("--out", opt.out_dir, "work directory for grid outputs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (run->parsed()) return cmd_run(opt);
    if (grid->parsed()) return cmd_grid(opt);
    if (summarize->parsed()) return cmd_summarize(opt);
    return cmd_check(opt);
  } catch (const smoothfbo::ConfigError& e) {
    std::cerr << "config error";
    if (e.line > 0) std::cerr << " (line " << e.line << ")";
    if (!e.key.empty()) std::cerr << " [" << e.key << "]";
    std::cerr << ": " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCellFailure;
  }
}
