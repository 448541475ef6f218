#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smoothfbo/funcgrad.hpp"
#include "smoothfbo/oracle.hpp"
#include "smoothfbo/outer_loop.hpp"

namespace smoothfbo {

enum class Method { kSmoothFbo, kFboW1, kUnrolled, kOracle };

Method method_from_string(const std::string& name);
std::string to_string(Method m);

// One experiment cell family, read from a flat key = value file with dotted
// section prefixes (inner.lr = 1e-4). '#' starts a comment; blank lines are
// skipped; unknown keys are rejected with their line number. An empty file
// is the default benchmark configuration.
struct ExperimentConfig {
  Method method = Method::kSmoothFbo;
  int t_max = 1000;                       // key: T
  int w = 50;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::string out_dir = "out";            // key: out

  double outer_lr = 1e-3;
  Constraint constraint = Constraint::kNonnegative;
  Vec64 box_lo, box_hi;                   // read when constraint = box
  double lambda_init = 1.0;

  DgpConfig data;

  std::string drift_kind = "sinusoidal";  // or "jump"
  double drift_beta = 1.5;
  double drift_omega = 0.012566370614359172;  // 2 pi / 500
  int drift_jump_interval = 250;
  double drift_jump_magnitude = 1.5;
  std::uint64_t drift_direction_seed = 0;

  std::string model_kind = "mlp";         // or "linear"
  std::vector<int> hidden{32, 32};

  InnerConfig inner;
  AdjointConfig adjoint;
  bool warm_start = true;
  double subsample = 1.0;
  std::vector<int> probe_rounds;
  int probe_replicates = 8;

  // Oracle-mode testbed (drifting quadratic on a centered box).
  int oracle_dim = 2;
  double oracle_amplitude = 1.0;
  double oracle_omega = 0.006283185307179587;  // 2 pi / 1000
  double oracle_sigma_f = 0.5;
  double oracle_alpha = 1.0;
  double oracle_box_halfwidth = 2.0;

  bool operator==(const ExperimentConfig&) const = default;

  // Cross-field checks beyond what parsing enforces; throws ConfigError.
  void validate() const;

  // Assembled run inputs. All of these call validate() implicitly via the
  // constructors' own checks.
  BenchmarkProblem make_problem() const;
  EstimationRunConfig estimation_config(std::uint64_t seed) const;
  DriftingQuadratic oracle_testbed() const;
  OracleRunConfig oracle_config(std::uint64_t seed) const;
};

// Parses and validates. ConfigError carries the offending key and the
// 1-based line number (0 for cross-field violations with no single line).
ExperimentConfig parse_config(const std::string& text);

// Canonical form: every key on its own line in a fixed order, doubles in
// shortest round-trip notation. parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& c);

// A grid file is an ExperimentConfig file whose `method` and `w` values may
// be comma lists; the cross product of those lists (times the seed list)
// defines the cells.
struct GridSpec {
  std::vector<Method> methods;
  std::vector<int> windows;
  ExperimentConfig base;
};

GridSpec parse_grid(const std::string& text);

}  // namespace smoothfbo
