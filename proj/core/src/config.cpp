#include "smoothfbo/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <utility>

#include "smoothfbo/csv.hpp"
#include "smoothfbo/errors.hpp"

namespace smoothfbo {

Method method_from_string(const std::string& name) {
  if (name == "smoothfbo") return Method::kSmoothFbo;
  if (name == "fbo_w1") return Method::kFboW1;
  if (name == "unrolled") return Method::kUnrolled;
  if (name == "oracle") return Method::kOracle;
  throw ConfigError("unknown method '" + name +
                        "' (expected smoothfbo, fbo_w1, unrolled, or oracle)",
                    0, "method");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::kSmoothFbo: return "smoothfbo";
    case Method::kFboW1: return "fbo_w1";
    case Method::kUnrolled: return "unrolled";
    case Method::kOracle: return "oracle";
  }
  throw Error("invalid method enum value");
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

// One key assignment being applied; carries the location for error text.
struct KeyContext {
  const std::string& key;
  int line;
  const std::string& value;

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("config key '" + key + "': " + what + " (got '" +
                          value + "')",
                      line, key);
  }
};

double want_f64(const KeyContext& kc) {
  try {
    return parse_double(kc.value);
  } catch (const Error&) {
    kc.fail("expected a number");
  }
}

int want_int(const KeyContext& kc, int min_value) {
  long v = 0;
  try {
    v = parse_long(kc.value);
  } catch (const Error&) {
    kc.fail("expected an integer");
  }
  if (v < min_value || v > 1000000000L) {
    kc.fail("expected an integer >= " + std::to_string(min_value));
  }
  return static_cast<int>(v);
}

std::uint64_t want_u64(const KeyContext& kc, std::string_view cell) {
  const std::string_view s = trim(cell);
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
    kc.fail("expected an unsigned integer");
  }
  return v;
}

bool want_bool(const KeyContext& kc) {
  if (kc.value == "true") return true;
  if (kc.value == "false") return false;
  kc.fail("expected true or false");
}

std::vector<std::string> want_list(const KeyContext& kc) {
  std::vector<std::string> out;
  for (const std::string& cell : split(kc.value, ',')) {
    const std::string_view t = trim(cell);
    if (t.empty()) kc.fail("empty list entry");
    out.emplace_back(t);
  }
  if (out.empty()) kc.fail("expected a nonempty comma list");
  return out;
}

double positive_f64(const KeyContext& kc) {
  const double v = want_f64(kc);
  if (!(v > 0.0)) kc.fail("expected a positive number");
  return v;
}

double nonnegative_f64(const KeyContext& kc) {
  const double v = want_f64(kc);
  if (!(v >= 0.0)) kc.fail("expected a nonnegative number");
  return v;
}

OptKind want_opt_kind(const KeyContext& kc) {
  try {
    return opt_kind_from_string(kc.value);
  } catch (const Error&) {
    kc.fail("expected sgd or adam");
  }
}

// Grid-only extension point: when `methods`/`windows` are non-null the
// `method` and `w` keys accept comma lists; otherwise they are scalar.
struct ParseSink {
  ExperimentConfig* cfg;
  std::vector<Method>* methods = nullptr;
  std::vector<int>* windows = nullptr;
};

void apply_key(const ParseSink& sink, const KeyContext& kc) {
  ExperimentConfig& c = *sink.cfg;
  const std::string& key = kc.key;

  if (key == "method") {
    if (sink.methods != nullptr) {
      sink.methods->clear();
      for (const std::string& cell : want_list(kc)) {
        try {
          sink.methods->push_back(method_from_string(cell));
        } catch (const ConfigError&) {
          kc.fail("unknown method '" + cell + "'");
        }
      }
      c.method = sink.methods->front();
      return;
    }
    try {
      c.method = method_from_string(kc.value);
    } catch (const ConfigError&) {
      kc.fail("unknown method");
    }
  } else if (key == "T") {
    c.t_max = want_int(kc, 1);
  } else if (key == "w") {
    if (sink.windows != nullptr) {
      sink.windows->clear();
      for (const std::string& cell : want_list(kc)) {
        const KeyContext inner_kc{kc.key, kc.line, cell};
        sink.windows->push_back(want_int(inner_kc, 1));
      }
      c.w = sink.windows->front();
      return;
    }
    c.w = want_int(kc, 1);
  } else if (key == "seeds") {
    c.seeds.clear();
    for (const std::string& cell : want_list(kc)) {
      c.seeds.push_back(want_u64(kc, cell));
    }
  } else if (key == "out") {
    if (kc.value.empty()) kc.fail("expected a directory path");
    c.out_dir = kc.value;
  } else if (key == "outer.lr") {
    c.outer_lr = positive_f64(kc);
  } else if (key == "outer.constraint") {
    try {
      c.constraint = constraint_from_string(kc.value);
    } catch (const ConfigError&) {
      kc.fail("expected nonnegative, box, or none");
    }
  } else if (key == "outer.box_lo") {
    c.box_lo.clear();
    for (const std::string& cell : want_list(kc)) {
      const KeyContext inner_kc{kc.key, kc.line, cell};
      c.box_lo.push_back(want_f64(inner_kc));
    }
  } else if (key == "outer.box_hi") {
    c.box_hi.clear();
    for (const std::string& cell : want_list(kc)) {
      const KeyContext inner_kc{kc.key, kc.line, cell};
      c.box_hi.push_back(want_f64(inner_kc));
    }
  } else if (key == "lambda.init") {
    c.lambda_init = want_f64(kc);
  } else if (key == "data.dim") {
    c.data.input_dim = want_int(kc, 1);
  } else if (key == "data.batch") {
    c.data.batch = want_int(kc, 1);
  } else if (key == "data.window") {
    c.data.window = want_int(kc, 1);
  } else if (key == "data.noise_std") {
    c.data.noise_std = nonnegative_f64(kc);
  } else if (key == "drift.kind") {
    if (kc.value != "sinusoidal" && kc.value != "jump") {
      kc.fail("expected sinusoidal or jump");
    }
    c.drift_kind = kc.value;
  } else if (key == "drift.beta") {
    c.drift_beta = want_f64(kc);
  } else if (key == "drift.omega") {
    c.drift_omega = want_f64(kc);
  } else if (key == "drift.jump_interval") {
    c.drift_jump_interval = want_int(kc, 1);
  } else if (key == "drift.jump_magnitude") {
    c.drift_jump_magnitude = want_f64(kc);
  } else if (key == "drift.direction_seed") {
    c.drift_direction_seed = want_u64(kc, kc.value);
  } else if (key == "model.kind") {
    if (kc.value != "mlp" && kc.value != "linear") {
      kc.fail("expected mlp or linear");
    }
    c.model_kind = kc.value;
  } else if (key == "model.hidden") {
    c.hidden.clear();
    for (const std::string& cell : want_list(kc)) {
      const KeyContext inner_kc{kc.key, kc.line, cell};
      c.hidden.push_back(want_int(inner_kc, 1));
    }
  } else if (key == "inner.lr") {
    c.inner.lr = positive_f64(kc);
  } else if (key == "inner.steps") {
    c.inner.steps = want_int(kc, 1);
  } else if (key == "inner.ridge") {
    c.inner.ridge = nonnegative_f64(kc);
  } else if (key == "inner.optimizer") {
    c.inner.optimizer = want_opt_kind(kc);
  } else if (key == "adjoint.lr") {
    c.adjoint.lr = positive_f64(kc);
  } else if (key == "adjoint.steps") {
    c.adjoint.steps = want_int(kc, 1);
  } else if (key == "adjoint.ridge") {
    c.adjoint.ridge = nonnegative_f64(kc);
  } else if (key == "adjoint.optimizer") {
    c.adjoint.optimizer = want_opt_kind(kc);
  } else if (key == "warm_start") {
    c.warm_start = want_bool(kc);
  } else if (key == "subsample") {
    const double v = want_f64(kc);
    if (!(v > 0.0) || v > 1.0) kc.fail("expected a fraction in (0, 1]");
    c.subsample = v;
  } else if (key == "probe.rounds") {
    c.probe_rounds.clear();
    if (trim(kc.value).empty()) return;  // explicit "no probes"
    for (const std::string& cell : want_list(kc)) {
      const KeyContext inner_kc{kc.key, kc.line, cell};
      c.probe_rounds.push_back(want_int(inner_kc, 1));
    }
  } else if (key == "probe.replicates") {
    c.probe_replicates = want_int(kc, 2);
  } else if (key == "oracle.dim") {
    c.oracle_dim = want_int(kc, 1);
  } else if (key == "oracle.amplitude") {
    c.oracle_amplitude = want_f64(kc);
  } else if (key == "oracle.omega") {
    c.oracle_omega = want_f64(kc);
  } else if (key == "oracle.sigma_f") {
    c.oracle_sigma_f = nonnegative_f64(kc);
  } else if (key == "oracle.alpha") {
    c.oracle_alpha = positive_f64(kc);
  } else if (key == "oracle.box_halfwidth") {
    c.oracle_box_halfwidth = positive_f64(kc);
  } else {
    throw ConfigError("unknown config key '" + key + "'", kc.line, key);
  }
}

void parse_into(const std::string& text, const ParseSink& sink) {
  int line_no = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string_view body = trim(line);
    if (body.empty()) continue;
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected 'key = value', got '" + std::string(body) +
                            "'",
                        line_no, "");
    }
    const std::string key(trim(body.substr(0, eq)));
    const std::string value(trim(body.substr(eq + 1)));
    if (key.empty()) {
      throw ConfigError("missing key before '='", line_no, "");
    }
    apply_key(sink, KeyContext{key, line_no, value});
  }
  sink.cfg->validate();
}

}  // namespace

void ExperimentConfig::validate() const {
  auto bad = [](const std::string& key, const std::string& what) {
    throw ConfigError("config key '" + key + "': " + what, 0, key);
  };
  if (constraint == Constraint::kBox) {
    const std::size_t k = method == Method::kOracle
                              ? static_cast<std::size_t>(oracle_dim)
                              : static_cast<std::size_t>(data.window);
    if (box_lo.size() != k || box_hi.size() != k) {
      bad("outer.box_lo",
          "box bounds must list one value per weight coordinate (" +
              std::to_string(k) + ")");
    }
    for (std::size_t i = 0; i < k; ++i) {
      if (!(box_lo[i] <= box_hi[i])) bad("outer.box_lo", "box has lo > hi");
    }
  }
  if (model_kind == "mlp" && hidden.empty()) {
    bad("model.hidden", "mlp needs at least one hidden layer");
  }
  for (int r : probe_rounds) {
    if (r > t_max) bad("probe.rounds", "probe round past T");
  }
  if (seeds.empty()) bad("seeds", "need at least one seed");
}

BenchmarkProblem ExperimentConfig::make_problem() const {
  const int d = data.input_dim;
  // Fixed base truth: unit-scale weights so predictions start in sigmoid's
  // responsive range for any input dimension; the drift moves (w, b) from
  // here along the seeded unit direction.
  Vec64 w0(static_cast<std::size_t>(d),
           1.0 / std::sqrt(static_cast<double>(d)));
  const Vec64 dir = drift_direction(drift_direction_seed, d + 1);
  DriftSchedule schedule =
      drift_kind == "jump"
          ? DriftSchedule::jump(std::move(w0), 0.0, drift_jump_interval,
                                drift_jump_magnitude, dir)
          : DriftSchedule::sinusoidal(std::move(w0), 0.0, drift_beta,
                                      drift_omega, dir);
  BenchmarkProblem problem(std::move(schedule), data);
  problem.hidden = hidden;
  problem.linear_predictor = model_kind == "linear";
  return problem;
}

EstimationRunConfig ExperimentConfig::estimation_config(
    std::uint64_t seed) const {
  EstimationRunConfig rc;
  rc.t_max = t_max;
  rc.w = method == Method::kFboW1 ? 1 : w;
  rc.smooth = method != Method::kFboW1;
  rc.outer_lr = outer_lr;
  rc.lambda_init = lambda_init;
  rc.constraint = constraint;
  rc.lo = box_lo;
  rc.hi = box_hi;
  rc.inner = inner;
  rc.adjoint = adjoint;
  rc.warm_start = warm_start;
  rc.subsample = subsample;
  rc.seed = seed;
  rc.probe_rounds = probe_rounds;
  rc.probe_replicates = probe_replicates;
  return rc;
}

DriftingQuadratic ExperimentConfig::oracle_testbed() const {
  DriftingQuadratic quad;
  quad.dim = oracle_dim;
  quad.center.assign(static_cast<std::size_t>(oracle_dim), 0.0);
  quad.direction = drift_direction(drift_direction_seed, oracle_dim);
  quad.amplitude = oracle_amplitude;
  quad.omega = oracle_omega;
  quad.lo.assign(static_cast<std::size_t>(oracle_dim), -oracle_box_halfwidth);
  quad.hi.assign(static_cast<std::size_t>(oracle_dim), oracle_box_halfwidth);
  quad.validate();
  return quad;
}

OracleRunConfig ExperimentConfig::oracle_config(std::uint64_t seed) const {
  OracleRunConfig rc;
  rc.t_max = t_max;
  rc.w = w;
  rc.alpha = oracle_alpha;
  rc.lambda1.assign(static_cast<std::size_t>(oracle_dim), lambda_init);
  rc.constraint = Constraint::kBox;
  rc.lo.assign(static_cast<std::size_t>(oracle_dim), -oracle_box_halfwidth);
  rc.hi.assign(static_cast<std::size_t>(oracle_dim), oracle_box_halfwidth);
  rc.seed = seed;
  return rc;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  parse_into(text, ParseSink{&cfg});
  return cfg;
}

namespace {

std::string join_u64(const std::vector<std::uint64_t>& xs) {
  std::vector<std::string> cells;
  cells.reserve(xs.size());
  for (std::uint64_t x : xs) cells.push_back(std::to_string(x));
  return join(cells, ',');
}

std::string join_int(const std::vector<int>& xs) {
  std::vector<std::string> cells;
  cells.reserve(xs.size());
  for (int x : xs) cells.push_back(std::to_string(x));
  return join(cells, ',');
}

std::string join_f64(const Vec64& xs) {
  std::vector<std::string> cells;
  cells.reserve(xs.size());
  for (double x : xs) cells.push_back(format_double(x));
  return join(cells, ',');
}

}  // namespace

std::string serialize_config(const ExperimentConfig& c) {
  std::string out;
  auto put = [&out](const std::string& key, const std::string& value) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  };
  put("method", to_string(c.method));
  put("T", std::to_string(c.t_max));
  put("w", std::to_string(c.w));
  put("seeds", join_u64(c.seeds));
  put("out", c.out_dir);
  put("outer.lr", format_double(c.outer_lr));
  put("outer.constraint", to_string(c.constraint));
  if (!c.box_lo.empty()) put("outer.box_lo", join_f64(c.box_lo));
  if (!c.box_hi.empty()) put("outer.box_hi", join_f64(c.box_hi));
  put("lambda.init", format_double(c.lambda_init));
  put("data.dim", std::to_string(c.data.input_dim));
  put("data.batch", std::to_string(c.data.batch));
  put("data.window", std::to_string(c.data.window));
  put("data.noise_std", format_double(c.data.noise_std));
  put("drift.kind", c.drift_kind);
  put("drift.beta", format_double(c.drift_beta));
  put("drift.omega", format_double(c.drift_omega));
  put("drift.jump_interval", std::to_string(c.drift_jump_interval));
  put("drift.jump_magnitude", format_double(c.drift_jump_magnitude));
  put("drift.direction_seed", std::to_string(c.drift_direction_seed));
  put("model.kind", c.model_kind);
  put("model.hidden", join_int(c.hidden));
  put("inner.lr", format_double(c.inner.lr));
  put("inner.steps", std::to_string(c.inner.steps));
  put("inner.ridge", format_double(c.inner.ridge));
  put("inner.optimizer", to_string(c.inner.optimizer));
  put("adjoint.lr", format_double(c.adjoint.lr));
  put("adjoint.steps", std::to_string(c.adjoint.steps));
  put("adjoint.ridge", format_double(c.adjoint.ridge));
  put("adjoint.optimizer", to_string(c.adjoint.optimizer));
  put("warm_start", c.warm_start ? "true" : "false");
  put("subsample", format_double(c.subsample));
  put("probe.rounds", join_int(c.probe_rounds));
  put("probe.replicates", std::to_string(c.probe_replicates));
  put("oracle.dim", std::to_string(c.oracle_dim));
  put("oracle.amplitude", format_double(c.oracle_amplitude));
  put("oracle.omega", format_double(c.oracle_omega));
  put("oracle.sigma_f", format_double(c.oracle_sigma_f));
  put("oracle.alpha", format_double(c.oracle_alpha));
  put("oracle.box_halfwidth", format_double(c.oracle_box_halfwidth));
  return out;
}

GridSpec parse_grid(const std::string& text) {
  GridSpec grid;
  grid.methods = {Method::kSmoothFbo};
  grid.windows = {grid.base.w};
  parse_into(text, ParseSink{&grid.base, &grid.methods, &grid.windows});
  return grid;
}

}  // namespace smoothfbo
