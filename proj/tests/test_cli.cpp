// End-to-end exit-code and output checks for the smoothfbo binary. Each case
// shells out via std::system, so these only run where /bin/sh exists.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <doctest.h>

#include "smoothfbo/csv.hpp"
#include "smoothfbo/runner.hpp"

namespace fs = std::filesystem;

namespace {

// `env -u` keeps a stray SMOOTHFBO_OUT in the test environment from
// redirecting the --out flags below.
std::string base_cmd() {
  return std::string("env -u SMOOTHFBO_OUT ") + SMOOTHFBO_CLI_PATH;
}

int exit_code(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

int run_quiet(const std::string& args) {
  return exit_code(base_cmd() + " " + args + " >/dev/null 2>&1");
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("smoothfbo_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string write_tiny_config(const fs::path& dir) {
  const std::string path = (dir / "tiny.cfg").string();
  smoothfbo::write_text_file(path,
                             "method = smoothfbo\n"
                             "T = 4\n"
                             "w = 2\n"
                             "seeds = 1\n"
                             "data.dim = 2\n"
                             "data.batch = 3\n"
                             "data.window = 2\n"
                             "data.noise_std = 0.05\n"
                             "model.hidden = 3\n"
                             "inner.steps = 2\n"
                             "inner.lr = 0.001\n"
                             "adjoint.steps = 2\n"
                             "adjoint.lr = 0.001\n");
  return path;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage and config mistakes exit 2") {
  CHECK(run_quiet("") == 2);                               // no subcommand
  CHECK(run_quiet("run --config /no/such/file.cfg") == 2); // unreadable file
  CHECK(run_quiet("run --w 0") == 2);                      // flag validation

  const fs::path dir = fresh_dir("badkey");
  const std::string cfg = (dir / "bad.cfg").string();
  smoothfbo::write_text_file(cfg, "bogus.key = 1\n");
  CHECK(run_quiet("run --config " + cfg) == 2);
}

TEST_CASE("tiny run writes ledgers and summarize reprints them") {
  const fs::path dir = fresh_dir("run");
  const std::string cfg = write_tiny_config(dir);
  const fs::path out = dir / "out";

  CHECK(run_quiet("run --config " + cfg + " --out " + out.string()) == 0);
  const fs::path ledger = out / "smoothfbo_w2_seed1.csv";
  CHECK(fs::exists(ledger));
  CHECK(fs::exists(out / "summary.csv"));

  // summarize prints exactly the library's summary CSV on stdout.
  const fs::path captured = dir / "summary_stdout.csv";
  CHECK(exit_code(base_cmd() + " summarize " + ledger.string() + " > " +
                  captured.string() + " 2>/dev/null") == 0);
  CHECK(smoothfbo::read_text_file(captured.string()) ==
        smoothfbo::summarize_ledgers({ledger.string()}));
}

TEST_CASE("unwritable output directory exits 1") {
  const fs::path dir = fresh_dir("unwritable");
  const std::string cfg = write_tiny_config(dir);
  CHECK(run_quiet("run --config " + cfg + " --out /dev/null/x") == 1);
}

TEST_CASE("SMOOTHFBO_OUT overrides --out") {
  const fs::path dir = fresh_dir("envout");
  const std::string cfg = write_tiny_config(dir);
  const fs::path by_env = dir / "by_env";
  const fs::path by_flag = dir / "by_flag";

  const std::string cmd = "SMOOTHFBO_OUT=" + by_env.string() + " " +
                          SMOOTHFBO_CLI_PATH + " run --config " + cfg +
                          " --out " + by_flag.string() + " >/dev/null 2>&1";
  CHECK(exit_code(cmd) == 0);
  CHECK(fs::exists(by_env / "smoothfbo_w2_seed1.csv"));
  CHECK_FALSE(fs::exists(by_flag / "smoothfbo_w2_seed1.csv"));
}

}  // TEST_SUITE
