#pragma once

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hapto/errors.hpp"
#include "hapto/grid.hpp"
#include "hapto/model.hpp"
#include "hapto/monitors.hpp"
#include "hapto/picard.hpp"
#include "hapto/time_integration.hpp"

// Configuration documents, initial data and file output.
//
// A configuration is a YAML mapping with the optional blocks grid, params,
// initial, run, picard and output. Every key has a default; unknown or
// repeated keys are errors. See README.md for the key list.

namespace hapto {

enum class Solver { Direct, Picard };

inline const char* to_string(Solver s) { return s == Solver::Direct ? "direct" : "picard"; }

/// Gaussian c^D centred on the middle cell, c^S a fixed fraction of it, v
/// filling the remaining volume, no MMPs. `noise` multiplies c^D by
/// 1 + noise * U(-1, 1) per cell.
struct TumourBumpPreset {
  double amplitude = 0.8;
  double width = 0.1;  ///< standard deviation as a fraction of lx
  double csc_fraction = 0.1;
  double noise = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const TumourBumpPreset&, const TumourBumpPreset&) = default;
};

struct UniformPreset {
  double dcc = 0.0;
  double csc = 0.0;
  double ecm = 1.0;
  double mmp = 0.0;

  friend bool operator==(const UniformPreset&, const UniformPreset&) = default;
};

/// One snapshot-format CSV per field.
struct FilePreset {
  std::string dcc, csc, ecm, mmp;

  friend bool operator==(const FilePreset&, const FilePreset&) = default;
};

using InitialPreset = std::variant<TumourBumpPreset, UniformPreset, FilePreset>;

struct OutputConfig {
  std::string directory = "out";
  bool csv = true;
  bool pgm = false;

  friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

struct SimulationConfig {
  int nx = 32;
  int ny = 32;
  double lx = 1.0;
  double ly = 1.0;
  ModelParameters params;
  InitialPreset initial = TumourBumpPreset{};
  RunConfig run;
  Solver solver = Solver::Direct;
  bool allow_unproven = false;
  PicardConfig picard;
  OutputConfig output;

  Grid2D grid() const { return Grid2D(nx, ny, lx, ly); }

  friend bool operator==(const SimulationConfig&, const SimulationConfig&) = default;
};

/// Command-line settings that take precedence over the document.
struct ConfigOverrides {
  std::optional<Solver> solver;
  bool strict_monitors = false;
  bool allow_unproven = false;
  std::optional<std::string> output_directory;
  std::optional<std::uint64_t> seed;
};

namespace detail {

inline std::string sci17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

class ConfigReader {
 public:
  std::vector<std::string> errors;

  void fail(const YAML::Node& at, const std::string& key, const std::string& message) {
    std::string where;
    const YAML::Mark m = at.Mark();
    if (!m.is_null()) where = "line " + std::to_string(m.line + 1) + ": ";
    errors.push_back(where + key + ": " + message);
  }

  /// The named block, or a null node if absent or malformed. Flags unknown and
  /// repeated keys.
  YAML::Node block(const YAML::Node& root, const std::string& name, std::initializer_list<std::string_view> keys) {
    const YAML::Node b = root[name];
    if (!b || b.IsNull()) return YAML::Node();
    if (!b.IsMap()) {
      fail(b, name, "expected a mapping");
      return YAML::Node();
    }
    check_keys(b, name, keys);
    return b;
  }

  void check_keys(const YAML::Node& map, const std::string& prefix, std::initializer_list<std::string_view> keys) {
    std::set<std::string> seen;
    for (const auto& kv : map) {
      const auto key = kv.first.Scalar();
      const std::string where = prefix.empty() ? key : prefix + "." + key;
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
        fail(kv.first, where, "unknown key");
      } else if (!seen.insert(key).second) {
        fail(kv.first, where, "duplicate key");
      }
    }
  }

  template <class T>
  std::optional<T> get(const YAML::Node& b, const std::string& block, const char* key, const char* type) {
    if (!b.IsMap()) return std::nullopt;
    const YAML::Node n = b[key];
    if (!n) return std::nullopt;
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail(n, block + "." + key, std::string("expected ") + type);
      return std::nullopt;
    }
  }

  /// Reads a finite number into `out`, enforcing `ok` with `requirement` as
  /// the message when it fails.
  template <class Pred>
  void number(const YAML::Node& b, const std::string& block, const char* key, double& out, Pred ok,
              const char* requirement) {
    const auto v = get<double>(b, block, key, "a number");
    if (!v) return;
    if (!std::isfinite(*v) || !ok(*v)) {
      fail(b[key], block + "." + key, std::string(requirement) + " required (got " + format(*v) + ")");
      return;
    }
    out = *v;
  }

  template <class Int, class Pred>
  void integer(const YAML::Node& b, const std::string& block, const char* key, Int& out, Pred ok,
               const char* requirement) {
    const auto v = get<long long>(b, block, key, "an integer");
    if (!v) return;
    if (!ok(*v)) {
      fail(b[key], block + "." + key, std::string(requirement) + " required (got " + std::to_string(*v) + ")");
      return;
    }
    out = static_cast<Int>(*v);
  }

  void flag(const YAML::Node& b, const std::string& block, const char* key, bool& out) {
    if (const auto v = get<bool>(b, block, key, "true or false")) out = *v;
  }

  /// Reads a string restricted to `choices`; returns the index of the match.
  std::optional<std::size_t> choice(const YAML::Node& b, const std::string& block, const char* key,
                                    std::initializer_list<std::string_view> choices) {
    const auto v = get<std::string>(b, block, key, "a string");
    if (!v) return std::nullopt;
    std::size_t k = 0;
    std::string listed;
    for (auto c : choices) {
      if (c == *v) return k;
      listed += (k++ == 0 ? "" : ", ");
      listed += c;
    }
    fail(b[key], block + "." + key, "'" + *v + "' is not one of " + listed);
    return std::nullopt;
  }

  static std::string format(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
  }
};

}  // namespace detail

/// Parses and validates a configuration document. Every problem found is
/// reported at once in a ConfigError.
inline SimulationConfig parse_config(const std::string& text, const ConfigOverrides& overrides = {}) {
  SimulationConfig cfg;
  detail::ConfigReader r;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError({"line " + std::to_string(e.mark.line + 1) + ", column " + std::to_string(e.mark.column + 1) +
                       ": syntax error: " + e.msg});
  }
  if (!root.IsNull() && !root.IsMap()) throw ConfigError({"the document must be a mapping of blocks"});
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  r.check_keys(root, "", {"grid", "params", "initial", "run", "picard", "output"});

  auto positive = [](double x) { return x > 0.0; };
  auto nonneg = [](double x) { return x >= 0.0; };
  auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };

  const auto grid = r.block(root, "grid", {"nx", "ny", "lx", "ly"});
  auto cells = [](long long n) { return n >= 3 && n <= std::numeric_limits<int>::max(); };
  r.integer(grid, "grid", "nx", cfg.nx, cells, "nx ≥ 3");
  r.integer(grid, "grid", "ny", cfg.ny, cells, "ny ≥ 3");
  r.number(grid, "grid", "lx", cfg.lx, positive, "lx > 0");
  r.number(grid, "grid", "ly", cfg.ly, positive, "ly > 0");

  const auto params =
      r.block(root, "params", {"chi_d", "chi_s", "mu_d", "mu_s", "mu_v", "mu_max", "emt_kind", "emt_value"});
  ModelParameters& p = cfg.params;
  auto any = [](double) { return true; };  // signs are checked by validate_params below
  r.number(params, "params", "chi_d", p.chi_d, any, "a finite value");
  r.number(params, "params", "chi_s", p.chi_s, any, "a finite value");
  r.number(params, "params", "mu_d", p.mu_d, any, "a finite value");
  r.number(params, "params", "mu_s", p.mu_s, any, "a finite value");
  r.number(params, "params", "mu_v", p.mu_v, any, "a finite value");
  r.number(params, "params", "mu_max", p.mu_max, any, "a finite value");
  {
    EmtKind kind = p.emt.kind();
    if (const auto k = r.choice(params, "params", "emt_kind", {"constant", "saturating"})) {
      kind = *k == 0 ? EmtKind::Constant : EmtKind::Saturating;
    }
    double value = kind == p.emt.kind() ? p.emt.parameter() : 0.0;
    r.number(params, "params", "emt_value", value, any, "a finite value");
    try {
      p.emt = kind == EmtKind::Constant ? EmtRateSpec::constant(value, p.mu_max) : EmtRateSpec::saturating(value);
    } catch (const ModelError& e) {
      r.fail(params.IsMap() ? params : root, "params.emt_value", e.what());
    }
  }

  const auto initial = root["initial"];
  std::size_t preset = 0;
  if (initial && !initial.IsNull()) {
    if (!initial.IsMap()) {
      r.fail(initial, "initial", "expected a mapping");
    } else if (const auto k = r.choice(initial, "initial", "preset", {"tumour_bump", "uniform", "files"})) {
      preset = *k;
    }
  }
  const bool initial_ok = initial && initial.IsMap();
  if (preset == 0) {
    TumourBumpPreset b;
    if (initial_ok) {
      r.check_keys(initial, "initial", {"preset", "amplitude", "width", "csc_fraction", "noise", "seed"});
      r.number(initial, "initial", "amplitude", b.amplitude, unit, "0 ≤ amplitude ≤ 1");
      r.number(initial, "initial", "width", b.width, positive, "width > 0");
      r.number(initial, "initial", "csc_fraction", b.csc_fraction, nonneg, "csc_fraction ≥ 0");
      r.number(initial, "initial", "noise", b.noise, unit, "0 ≤ noise ≤ 1");
      r.integer(initial, "initial", "seed", b.seed, [](long long s) { return s >= 0; }, "seed ≥ 0");
    }
    if (overrides.seed) b.seed = *overrides.seed;
    cfg.initial = b;
  } else if (preset == 1) {
    UniformPreset u;
    r.check_keys(initial, "initial", {"preset", "dcc", "csc", "ecm", "mmp"});
    r.number(initial, "initial", "dcc", u.dcc, nonneg, "dcc ≥ 0");
    r.number(initial, "initial", "csc", u.csc, nonneg, "csc ≥ 0");
    r.number(initial, "initial", "ecm", u.ecm, unit, "0 ≤ ecm ≤ 1");
    r.number(initial, "initial", "mmp", u.mmp, nonneg, "mmp ≥ 0");
    cfg.initial = u;
  } else {
    FilePreset f;
    r.check_keys(initial, "initial", {"preset", "dcc", "csc", "ecm", "mmp"});
    for (auto [key, out] : {std::pair{"dcc", &f.dcc}, {"csc", &f.csc}, {"ecm", &f.ecm}, {"mmp", &f.mmp}}) {
      if (const auto path = r.get<std::string>(initial, "initial", key, "a path")) {
        *out = *path;
      } else if (!initial[key]) {
        r.fail(initial, std::string("initial.") + key, "required for preset files");
      }
    }
    cfg.initial = f;
  }

  const auto run = r.block(root, "run",
                           {"t_end", "cfl_safety", "dt_max", "formulation", "solver", "snapshot_every", "monitor_every",
                            "strict_monitors", "allow_unproven", "monitor_tol_rel"});
  RunConfig& rc = cfg.run;
  r.number(run, "run", "t_end", rc.t_end, positive, "t_end > 0");
  r.number(run, "run", "cfl_safety", rc.cfl_safety, [](double x) { return x > 0.0 && x <= 1.0; },
           "0 < cfl_safety ≤ 1");
  r.number(run, "run", "dt_max", rc.dt_max, positive, "dt_max > 0");
  if (const auto k = r.choice(run, "run", "formulation", {"original", "transformed"})) {
    rc.formulation = *k == 0 ? Formulation::Original : Formulation::Transformed;
  }
  if (const auto k = r.choice(run, "run", "solver", {"direct", "picard"})) {
    cfg.solver = *k == 0 ? Solver::Direct : Solver::Picard;
  }
  auto count = [](long long n) { return n >= 0; };
  r.integer(run, "run", "snapshot_every", rc.snapshot_every, count, "snapshot_every ≥ 0");
  r.integer(run, "run", "monitor_every", rc.monitor_every, count, "monitor_every ≥ 0");
  r.flag(run, "run", "strict_monitors", rc.strict_monitors);
  r.flag(run, "run", "allow_unproven", cfg.allow_unproven);
  r.number(run, "run", "monitor_tol_rel", rc.monitor_tol_rel, positive, "monitor_tol_rel > 0");

  const auto picard = r.block(root, "picard", {"window", "tol", "max_iter", "inner_dt_factor", "compat_tol"});
  PicardConfig& pc = cfg.picard;
  r.number(picard, "picard", "window", pc.window, positive, "window > 0");
  r.number(picard, "picard", "tol", pc.tol, positive, "tol > 0");
  r.integer(picard, "picard", "max_iter", pc.max_iter, [](long long n) { return n >= 1; }, "max_iter ≥ 1");
  r.number(picard, "picard", "inner_dt_factor", pc.inner_dt_factor, [](double x) { return x >= 1.0; },
           "inner_dt_factor ≥ 1");
  r.number(picard, "picard", "compat_tol", pc.compat_tol, positive, "compat_tol > 0");
  pc.cfl_safety = rc.cfl_safety;
  pc.dt_max = rc.dt_max;

  const auto output = r.block(root, "output", {"directory", "formats"});
  if (const auto dir = r.get<std::string>(output, "output", "directory", "a path")) cfg.output.directory = *dir;
  if (output.IsMap() && output["formats"]) {
    const auto formats = r.get<std::vector<std::string>>(output, "output", "formats", "a list of formats");
    if (formats) {
      cfg.output.csv = cfg.output.pgm = false;
      for (const auto& f : *formats) {
        if (f == "csv") {
          cfg.output.csv = true;
        } else if (f == "pgm") {
          cfg.output.pgm = true;
        } else {
          r.fail(output["formats"], "output.formats", "'" + f + "' is not one of csv, pgm");
        }
      }
    }
  }

  if (overrides.solver) cfg.solver = *overrides.solver;
  if (overrides.strict_monitors) rc.strict_monitors = true;
  if (overrides.allow_unproven) cfg.allow_unproven = true;
  if (overrides.output_directory) cfg.output.directory = *overrides.output_directory;

  const YAML::Node params_at = params.IsMap() ? params : root;
  for (const auto& v : validate_params(p)) {
    if (v.growth_condition && cfg.allow_unproven) continue;
    r.fail(params_at, "params", v.message + (v.growth_condition ? " (unproven regime; see --allow-unproven)" : ""));
  }
  if (cfg.solver == Solver::Picard && rc.formulation == Formulation::Original) {
    // The fixed-point solver always works on the transformed unknowns.
    rc.formulation = Formulation::Transformed;
  }

  if (!r.errors.empty()) throw ConfigError(std::move(r.errors));
  return cfg;
}

/// Canonical YAML text for cfg; parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const SimulationConfig& cfg) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;
  e << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "nx" << YAML::Value << cfg.nx << YAML::Key << "ny" << YAML::Value << cfg.ny;
  e << YAML::Key << "lx" << YAML::Value << cfg.lx << YAML::Key << "ly" << YAML::Value << cfg.ly;
  e << YAML::EndMap;

  const auto& p = cfg.params;
  e << YAML::Key << "params" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "chi_d" << YAML::Value << p.chi_d << YAML::Key << "chi_s" << YAML::Value << p.chi_s;
  e << YAML::Key << "mu_d" << YAML::Value << p.mu_d << YAML::Key << "mu_s" << YAML::Value << p.mu_s;
  e << YAML::Key << "mu_v" << YAML::Value << p.mu_v << YAML::Key << "mu_max" << YAML::Value << p.mu_max;
  e << YAML::Key << "emt_kind" << YAML::Value
    << (p.emt.kind() == EmtKind::Constant ? "constant" : "saturating");
  e << YAML::Key << "emt_value" << YAML::Value << p.emt.parameter();
  e << YAML::EndMap;

  e << YAML::Key << "initial" << YAML::Value << YAML::BeginMap;
  if (const auto* b = std::get_if<TumourBumpPreset>(&cfg.initial)) {
    e << YAML::Key << "preset" << YAML::Value << "tumour_bump";
    e << YAML::Key << "amplitude" << YAML::Value << b->amplitude;
    e << YAML::Key << "width" << YAML::Value << b->width;
    e << YAML::Key << "csc_fraction" << YAML::Value << b->csc_fraction;
    e << YAML::Key << "noise" << YAML::Value << b->noise;
    e << YAML::Key << "seed" << YAML::Value << b->seed;
  } else if (const auto* u = std::get_if<UniformPreset>(&cfg.initial)) {
    e << YAML::Key << "preset" << YAML::Value << "uniform";
    e << YAML::Key << "dcc" << YAML::Value << u->dcc << YAML::Key << "csc" << YAML::Value << u->csc;
    e << YAML::Key << "ecm" << YAML::Value << u->ecm << YAML::Key << "mmp" << YAML::Value << u->mmp;
  } else {
    const auto& f = std::get<FilePreset>(cfg.initial);
    e << YAML::Key << "preset" << YAML::Value << "files";
    e << YAML::Key << "dcc" << YAML::Value << f.dcc << YAML::Key << "csc" << YAML::Value << f.csc;
    e << YAML::Key << "ecm" << YAML::Value << f.ecm << YAML::Key << "mmp" << YAML::Value << f.mmp;
  }
  e << YAML::EndMap;

  const auto& rc = cfg.run;
  e << YAML::Key << "run" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "t_end" << YAML::Value << rc.t_end;
  e << YAML::Key << "cfl_safety" << YAML::Value << rc.cfl_safety;
  e << YAML::Key << "dt_max" << YAML::Value << rc.dt_max;
  e << YAML::Key << "formulation" << YAML::Value << to_string(rc.formulation);
  e << YAML::Key << "solver" << YAML::Value << to_string(cfg.solver);
  e << YAML::Key << "snapshot_every" << YAML::Value << rc.snapshot_every;
  e << YAML::Key << "monitor_every" << YAML::Value << rc.monitor_every;
  e << YAML::Key << "strict_monitors" << YAML::Value << rc.strict_monitors;
  e << YAML::Key << "allow_unproven" << YAML::Value << cfg.allow_unproven;
  e << YAML::Key << "monitor_tol_rel" << YAML::Value << rc.monitor_tol_rel;
  e << YAML::EndMap;

  const auto& pc = cfg.picard;
  e << YAML::Key << "picard" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "window" << YAML::Value << pc.window << YAML::Key << "tol" << YAML::Value << pc.tol;
  e << YAML::Key << "max_iter" << YAML::Value << pc.max_iter;
  e << YAML::Key << "inner_dt_factor" << YAML::Value << pc.inner_dt_factor;
  e << YAML::Key << "compat_tol" << YAML::Value << pc.compat_tol;
  e << YAML::EndMap;

  e << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "directory" << YAML::Value << cfg.output.directory;
  e << YAML::Key << "formats" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  if (cfg.output.csv) e << "csv";
  if (cfg.output.pgm) e << "pgm";
  e << YAML::EndSeq << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file", path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed", path.string());
  return ss.str();
}

/// Reads and parses a config file. Relative initial-data paths are taken
/// relative to the file's directory.
inline SimulationConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {}) {
  SimulationConfig cfg = parse_config(read_text_file(path), overrides);
  if (auto* f = std::get_if<FilePreset>(&cfg.initial)) {
    const auto base = path.parent_path();
    for (std::string* s : {&f->dcc, &f->csc, &f->ecm, &f->mmp}) {
      if (std::filesystem::path(*s).is_relative()) *s = (base / *s).string();
    }
  }
  return cfg;
}

// ---- snapshot files -------------------------------------------------------

/// ny rows of nx values, row 0 southernmost, 17 significant digits.
inline void write_field_csv(const Field& f, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create file", path.string());
  const Grid2D& g = f.grid();
  std::string line;
  for (int j = 0; j < g.ny(); ++j) {
    line.clear();
    for (int i = 0; i < g.nx(); ++i) {
      if (i > 0) line += ',';
      line += detail::sci17(f(i, j));
    }
    line += '\n';
    out << line;
  }
  if (!out) throw IoError("write failed", path.string());
}

inline Field read_field_csv(const std::filesystem::path& path, const Grid2D& g) {
  const std::string text = read_text_file(path);
  std::vector<double> values;
  values.reserve(g.cells());
  std::istringstream in(text);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++rows;
    int cols = 0;
    const char* pos = line.data();
    const char* end = line.data() + line.size();
    while (true) {
      double x = 0.0;
      const auto res = std::from_chars(pos, end, x);
      if (res.ec != std::errc()) {
        throw StructuralError("malformed value in row " + std::to_string(rows) + " of " + path.string());
      }
      values.push_back(x);
      ++cols;
      pos = res.ptr;
      if (pos == end) break;
      if (*pos != ',') {
        throw StructuralError("malformed value in row " + std::to_string(rows) + " of " + path.string());
      }
      ++pos;
    }
    if (cols != g.nx()) {
      throw StructuralError(path.string() + ": row " + std::to_string(rows) + " has " + std::to_string(cols) +
                            " values, grid has nx = " + std::to_string(g.nx()));
    }
  }
  if (rows != g.ny()) {
    throw StructuralError(path.string() + ": " + std::to_string(rows) + " rows, grid has ny = " +
                          std::to_string(g.ny()));
  }
  return Field(g, std::move(values));
}

/// Binary 8-bit graymap, north up: [0, scale_max] maps linearly onto
/// [0, 255]; values outside are saturated.
inline void write_field_pgm(const Field& f, const std::filesystem::path& path, double scale_max) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create file", path.string());
  const Grid2D& g = f.grid();
  out << "P5\n" << g.nx() << ' ' << g.ny() << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(g.nx()));
  for (int j = g.ny() - 1; j >= 0; --j) {
    for (int i = 0; i < g.nx(); ++i) {
      const double x = scale_max > 0.0 ? f(i, j) / scale_max : 0.0;
      row[static_cast<std::size_t>(i)] =
          static_cast<unsigned char>(std::lround(255.0 * std::clamp(std::isfinite(x) ? x : 0.0, 0.0, 1.0)));
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw IoError("write failed", path.string());
}

inline std::string snapshot_name(std::string_view field, std::size_t step, std::string_view ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%06zu.", step);
  return std::string(field) + buf + std::string(ext);
}

/// Writes `{field}_{step:06d}.csv` (and .pgm) for each field of an
/// original-formulation state. The PGM scale is the largest value written so
/// far for that field.
class SnapshotWriter {
 public:
  SnapshotWriter(std::filesystem::path dir, bool csv = true, bool pgm = false)
      : dir_(std::move(dir)), csv_(csv), pgm_(pgm) {}

  std::vector<std::filesystem::path> write(const State& s) {
    if (s.formulation != Formulation::Original) {
      throw StructuralError("snapshots are written in the original variables");
    }
    std::vector<std::filesystem::path> files;
    const std::array<const Field*, 4> fields = {&s.dcc, &s.csc, &s.ecm, &s.mmp};
    for (std::size_t k = 0; k < 4; ++k) {
      running_max_[k] = std::max(running_max_[k], fields[k]->max());
      if (csv_) {
        files.push_back(dir_ / snapshot_name(kFieldNames[k], s.step, "csv"));
        write_field_csv(*fields[k], files.back());
      }
      if (pgm_) {
        files.push_back(dir_ / snapshot_name(kFieldNames[k], s.step, "pgm"));
        write_field_pgm(*fields[k], files.back(), running_max_[k]);
      }
    }
    return files;
  }

 private:
  std::filesystem::path dir_;
  bool csv_;
  bool pgm_;
  std::array<double, 4> running_max_{};
};

inline std::vector<std::filesystem::path> write_snapshot(const State& s, const std::filesystem::path& dir,
                                                         bool pgm = false) {
  return SnapshotWriter(dir, true, pgm).write(s);
}

/// Monitor time series, one row per check.
class MonitorCsvWriter {
 public:
  explicit MonitorCsvWriter(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot create file", path.string());
    out_ << "time,l1_cd,l1_cs,l1_m,min_cd,min_cs,min_m,min_v,max_v,sup_cd,sup_cs,sup_m";
    for (const char* name : kCheckNames) out_ << ",status_" << name;
    out_ << '\n';
  }

  void write(const MonitorReport& r) {
    out_ << detail::sci17(r.time);
    for (double x : {r.l1_cd, r.l1_cs, r.l1_m, r.min_cd, r.min_cs, r.min_m, r.min_v, r.max_v, r.sup_cd, r.sup_cs,
                     r.sup_m}) {
      out_ << ',' << detail::sci17(x);
    }
    for (const auto& c : r.checks) out_ << ',' << to_string(c.status);
    out_ << '\n';
    if (!out_) throw IoError("write failed", path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

// ---- initial data ---------------------------------------------------------

struct InitialCondition {
  State state;
  std::size_t clipped_cells = 0;  ///< cells changed to restore the sign/volume constraints
};

namespace detail {

inline void require_admissible(const Field& f, const std::string& name, const std::string& path, bool unit) {
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (!(f[k] >= 0.0)) throw ModelError(name + " has negative or invalid value " + sci17(f[k]) + " in " + path);
    if (unit && f[k] > 1.0) throw ModelError(name + " exceeds 1 (" + sci17(f[k]) + ") in " + path);
  }
}

}  // namespace detail

inline InitialCondition build_initial(const InitialPreset& preset, const Grid2D& g) {
  if (const auto* u = std::get_if<UniformPreset>(&preset)) {
    if (!(u->dcc >= 0.0 && u->csc >= 0.0 && u->mmp >= 0.0 && u->ecm >= 0.0 && u->ecm <= 1.0)) {
      throw ModelError("uniform preset needs dcc, csc, mmp >= 0 and 0 <= ecm <= 1");
    }
    return {State::uniform(g, u->dcc, u->csc, u->ecm, u->mmp), 0};
  }
  if (const auto* f = std::get_if<FilePreset>(&preset)) {
    Field cd = read_field_csv(f->dcc, g);
    Field cs = read_field_csv(f->csc, g);
    Field v = read_field_csv(f->ecm, g);
    Field m = read_field_csv(f->mmp, g);
    detail::require_admissible(cd, "dcc", f->dcc, false);
    detail::require_admissible(cs, "csc", f->csc, false);
    detail::require_admissible(v, "ecm", f->ecm, true);
    detail::require_admissible(m, "mmp", f->mmp, false);
    return {State(Formulation::Original, std::move(cd), std::move(cs), std::move(v), std::move(m), 0.0), 0};
  }

  const auto& b = std::get<TumourBumpPreset>(preset);
  if (!(b.amplitude >= 0.0 && b.width > 0.0 && b.csc_fraction >= 0.0 && b.noise >= 0.0)) {
    throw ModelError("tumour_bump preset needs amplitude >= 0, width > 0, csc_fraction >= 0, noise >= 0");
  }
  const double x0 = g.x_center(g.nx() / 2);
  const double y0 = g.y_center(g.ny() / 2);
  const double w = b.width * g.lx();
  std::mt19937_64 rng(b.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Field cd(g), cs(g), v(g), m(g);
  InitialCondition ic{State::uniform(g, 0.0, 0.0, 1.0, 0.0), 0};
  for (int j = 0; j < g.ny(); ++j) {
    for (int i = 0; i < g.nx(); ++i) {
      const double dx = g.x_center(i) - x0;
      const double dy = g.y_center(j) - y0;
      double d = b.amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * w * w));
      if (b.noise > 0.0) d *= 1.0 + b.noise * unit(rng);
      double s = b.csc_fraction * d;
      bool clipped = false;
      if (d + s > 1.0) {
        // keep the DCC:CSC ratio, shrink to fill the cell
        const double scale = 1.0 / (d + s);
        d *= scale;
        s *= scale;
        clipped = true;
      }
      const double vol = 1.0 - d - s;
      const double vc = std::clamp(vol, 0.0, 1.0);
      clipped = clipped || vc != vol;
      cd(i, j) = d;
      cs(i, j) = s;
      v(i, j) = vc;
      ic.clipped_cells += clipped ? 1 : 0;
    }
  }
  ic.state = State(Formulation::Original, std::move(cd), std::move(cs), std::move(v), std::move(m), 0.0);
  return ic;
}

}  // namespace hapto
