#include "lsmfg/config.hpp"

#include "lsmfg/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace lsmfg {

namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& field,
                         const std::string& msg) const {
    std::ostringstream out;
    out << source_;
    if (at.IsDefined() && at.Mark().line >= 0) out << ':' << at.Mark().line + 1;
    out << ": " << field << ": " << msg;
    throw ConfigError(out.str());
  }

  YAML::Node map(const YAML::Node& parent, const std::string& key,
                 const std::string& field, bool required) const {
    const YAML::Node n = parent[key];
    if (!n) {
      if (required) fail(parent, field, "missing section");
      return n;
    }
    if (!n.IsMap()) fail(n, field, "expected a mapping");
    return n;
  }

  void known_keys(const YAML::Node& n, const std::string& field,
                  std::initializer_list<const char*> keys) const {
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& kv : n) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key))
        fail(kv.first, field.empty() ? key : field + "." + key, "unknown key");
    }
  }

  template <typename T>
  T scalar(const YAML::Node& n, const std::string& field) const {
    if (!n.IsScalar()) fail(n, field, "expected a scalar");
    try {
      return n.as<T>();
    } catch (const YAML::BadConversion&) {
      fail(n, field, "cannot convert '" + n.Scalar() + "'");
    }
  }

  template <typename T>
  T optional(const YAML::Node& parent, const std::string& key,
             const std::string& field, T fallback) const {
    const YAML::Node n = parent[key];
    return n ? scalar<T>(n, field) : fallback;
  }

  template <typename T>
  T required(const YAML::Node& parent, const std::string& key,
             const std::string& field) const {
    const YAML::Node n = parent[key];
    if (!n) fail(parent, field, "missing value");
    return scalar<T>(n, field);
  }

  std::vector<int> int_list(const YAML::Node& n, const std::string& field) const {
    if (n.IsScalar()) return {scalar<int>(n, field)};
    if (!n.IsSequence()) fail(n, field, "expected a list of integers");
    std::vector<int> out;
    for (std::size_t i = 0; i < n.size(); ++i)
      out.push_back(scalar<int>(n[i], field + "[" + std::to_string(i) + "]"));
    return out;
  }

  Eigen::VectorXd vector(const YAML::Node& n, const std::string& field,
                         int size) const {
    if (n.IsScalar() && size == 1)
      return Eigen::VectorXd::Constant(1, scalar<double>(n, field));
    if (!n.IsSequence() || static_cast<int>(n.size()) != size)
      fail(n, field, "expected a list of " + std::to_string(size) + " numbers");
    Eigen::VectorXd v(size);
    for (int i = 0; i < size; ++i)
      v[i] = scalar<double>(n[i], field + "[" + std::to_string(i) + "]");
    return v;
  }

  /// Nested list of rows, or a scalar s meaning s times the identity. With
  /// cols < 0 the column count is taken from the data.
  Eigen::MatrixXd matrix(const YAML::Node& n, const std::string& field, int rows,
                         int cols) const {
    if (n.IsScalar()) {
      if (cols >= 0 && cols != rows)
        fail(n, field, "a scalar is only accepted for a square matrix");
      return scalar<double>(n, field) * Eigen::MatrixXd::Identity(rows, rows);
    }
    if (!n.IsSequence() || static_cast<int>(n.size()) != rows)
      fail(n, field, "expected " + std::to_string(rows) + " rows");
    const YAML::Node first = n[0];
    if (!first.IsSequence()) fail(first, field, "each row must be a list");
    const int c = cols >= 0 ? cols : static_cast<int>(first.size());
    Eigen::MatrixXd m(rows, c);
    for (int i = 0; i < rows; ++i) {
      const YAML::Node row = n[i];
      const std::string rf = field + "[" + std::to_string(i) + "]";
      if (!row.IsSequence() || static_cast<int>(row.size()) != c)
        fail(row, rf, "expected " + std::to_string(c) + " entries");
      for (int j = 0; j < c; ++j)
        m(i, j) = scalar<double>(row[j], rf + "[" + std::to_string(j) + "]");
    }
    return m;
  }

  StateCost state_cost(const YAML::Node& n, const std::string& field, int dim,
                       std::initializer_list<const char*> extra = {}) const {
    std::vector<const char*> keys{"q", "target", "bumps", "offset"};
    keys.insert(keys.end(), extra.begin(), extra.end());
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& kv : n) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) fail(kv.first, field + "." + key, "unknown key");
    }
    StateCost c;
    if (n["q"]) {
      c.q = matrix(n["q"], field + ".q", dim, dim);
      c.target = n["target"] ? vector(n["target"], field + ".target", dim)
                             : Eigen::VectorXd::Zero(dim);
    }
    if (const YAML::Node bumps = n["bumps"]) {
      if (!bumps.IsSequence()) fail(bumps, field + ".bumps", "expected a list");
      for (std::size_t i = 0; i < bumps.size(); ++i) {
        const YAML::Node b = bumps[i];
        const std::string bf = field + ".bumps[" + std::to_string(i) + "]";
        if (!b.IsMap()) fail(b, bf, "expected a mapping");
        known_keys(b, bf, {"center", "shape", "height"});
        GaussianBump bump;
        if (!b["center"]) fail(b, bf + ".center", "missing value");
        if (!b["shape"]) fail(b, bf + ".shape", "missing value");
        bump.center = vector(b["center"], bf + ".center", dim);
        bump.shape = matrix(b["shape"], bf + ".shape", dim, dim);
        bump.height = required<double>(b, "height", bf + ".height");
        c.bumps.push_back(std::move(bump));
      }
    }
    c.offset = optional<double>(n, "offset", field + ".offset", 0.0);
    return c;
  }

 private:
  std::string source_;
};

ProblemSpec read_problem(const Reader& rd, const YAML::Node& p) {
  rd.known_keys(p, "problem",
                {"dim", "horizon", "drift", "cost", "sigma", "b", "r",
                 "terminal_cost", "initial_density", "normalize_density"});
  ProblemSpec s;
  s.dim = rd.required<int>(p, "dim", "problem.dim");
  if (s.dim < 1) rd.fail(p["dim"], "problem.dim", "must be >= 1");
  const int n = s.dim;
  s.horizon = rd.optional<double>(p, "horizon", "problem.horizon", 1.0);
  if (!(s.horizon > 0.0))
    rd.fail(p["horizon"], "problem.horizon", "must be > 0");

  if (const YAML::Node d = p["drift"]) {
    if (!d.IsMap()) rd.fail(d, "problem.drift", "expected a mapping");
    rd.known_keys(d, "problem.drift", {"type", "a"});
    const auto type = rd.required<std::string>(d, "type", "problem.drift.type");
    if (type == "zero") {
      s.drift = ZeroDrift{};
    } else if (type == "linear") {
      if (!d["a"]) rd.fail(d, "problem.drift.a", "missing value");
      s.drift = LinearDrift{rd.matrix(d["a"], "problem.drift.a", n, n)};
    } else {
      rd.fail(d["type"], "problem.drift.type",
              "unknown drift type '" + type + "' (zero, linear)");
    }
  }

  if (const YAML::Node c = rd.map(p, "cost", "problem.cost", false)) {
    s.cost.state = rd.state_cost(c, "problem.cost", n, {"congestion"});
    s.cost.congestion =
        rd.optional<double>(c, "congestion", "problem.cost.congestion", 0.0);
  }
  if (const YAML::Node t =
          rd.map(p, "terminal_cost", "problem.terminal_cost", false))
    s.terminal_cost = rd.state_cost(t, "problem.terminal_cost", n);

  if (!p["sigma"]) rd.fail(p, "problem.sigma", "missing value");
  s.sigma = rd.matrix(p["sigma"], "problem.sigma", n, n);
  s.b = p["b"] ? rd.matrix(p["b"], "problem.b", n, -1)
               : Eigen::MatrixXd::Identity(n, n);
  const int m = static_cast<int>(s.b.cols());
  s.r = p["r"] ? rd.matrix(p["r"], "problem.r", m, m)
               : Eigen::MatrixXd::Identity(m, m);

  if (const YAML::Node d =
          rd.map(p, "initial_density", "problem.initial_density", false)) {
    rd.known_keys(d, "problem.initial_density", {"kind", "mean", "covariance"});
    const auto kind = rd.optional<std::string>(
        d, "kind", "problem.initial_density.kind", "uniform");
    if (kind == "uniform") {
      s.initial_density.kind = InitialDensity::Kind::uniform;
    } else if (kind == "gaussian" || kind == "bump") {
      s.initial_density.kind = kind == "gaussian" ? InitialDensity::Kind::gaussian
                                                  : InitialDensity::Kind::bump;
      if (!d["covariance"])
        rd.fail(d, "problem.initial_density.covariance", "missing value");
      s.initial_density.mean =
          d["mean"] ? rd.vector(d["mean"], "problem.initial_density.mean", n)
                    : Eigen::VectorXd::Zero(n);
      s.initial_density.covariance = rd.matrix(
          d["covariance"], "problem.initial_density.covariance", n, n);
    } else {
      rd.fail(d["kind"], "problem.initial_density.kind",
              "unknown kind '" + kind + "' (uniform, gaussian, bump)");
    }
  }
  s.normalize_density = rd.optional<bool>(p, "normalize_density",
                                          "problem.normalize_density", true);
  return s;
}

YAML::Node flow(YAML::Node n) {
  n.SetStyle(YAML::EmitterStyle::Flow);
  return n;
}

YAML::Node emit_vector(const Eigen::VectorXd& v) {
  YAML::Node n;
  for (Index i = 0; i < v.size(); ++i) n.push_back(v[i]);
  return flow(n);
}

YAML::Node emit_matrix(const Eigen::MatrixXd& m) {
  YAML::Node n;
  for (Index i = 0; i < m.rows(); ++i) {
    YAML::Node row;
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    n.push_back(flow(row));
  }
  return n;
}

YAML::Node emit_ints(const std::vector<int>& v) {
  YAML::Node n;
  for (int x : v) n.push_back(x);
  return flow(n);
}

YAML::Node emit_state_cost(const StateCost& c) {
  YAML::Node n(YAML::NodeType::Map);
  if (c.q.size() != 0) {
    n["q"] = emit_matrix(c.q);
    n["target"] = emit_vector(c.target);
  }
  for (const auto& b : c.bumps) {
    YAML::Node bn;
    bn["center"] = emit_vector(b.center);
    bn["shape"] = emit_matrix(b.shape);
    bn["height"] = b.height;
    n["bumps"].push_back(bn);
  }
  n["offset"] = c.offset;
  return n;
}

}  // namespace

bool OutputSection::wants(const std::string& format) const {
  return std::find(formats.begin(), formats.end(), format) != formats.end();
}

TimeRule RunConfig::time_rule() const {
  TimeRule rule;
  rule.time_steps = grid.nt;
  rule.cfl_target = grid.cfl_target;
  return rule;
}

int RunConfig::export_stride(const PeriodicGrid& g) const {
  return output.stride ? *output.stride : std::max(1, g.time_steps() / 10);
}

SolveOptions<double> RunConfig::solve_options() const {
  SolveOptions<double> o;
  o.tolerance = solver.tolerance;
  o.max_iterations = solver.max_iterations;
  o.initial_guess = solver.initial_guess;
  o.check_bounds = solver.check_bounds;
  return o;
}

DxStudySpec RunConfig::dx_study() const {
  DxStudySpec s;
  s.ladder = sweep.ladder;
  s.reference_partitions = sweep.reference_nx;
  s.reference_iterations = sweep.reference_iterations;
  s.iterations = sweep.iterations;
  // A fixed step count cannot serve every ladder point.
  s.time_rule.cfl_target = grid.cfl_target;
  s.guess = solver.initial_guess;
  return s;
}

KStudySpec RunConfig::k_study() const {
  KStudySpec s;
  s.partitions = sweep.k_nx.empty() ? grid.nx : sweep.k_nx;
  s.k_list = sweep.k_list;
  s.reference_partitions =
      sweep.reference_nx.empty() ? s.partitions : sweep.reference_nx;
  s.reference_iterations = sweep.reference_iterations;
  s.time_rule.cfl_target = grid.cfl_target;
  if (grid.nt && s.partitions == grid.nx && s.reference_partitions == grid.nx)
    s.time_rule.time_steps = grid.nt;
  s.guess = solver.initial_guess;
  return s;
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  const Reader rd(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    std::ostringstream out;
    out << source << ':' << e.mark.line + 1 << ": syntax: " << e.msg;
    throw ConfigError(out.str());
  }
  if (!root.IsMap()) rd.fail(root, "<root>", "expected a mapping of sections");
  rd.known_keys(root, "", {"problem", "grid", "solver", "output", "sweep"});

  RunConfig cfg;
  cfg.source = source;
  cfg.problem = read_problem(rd, rd.map(root, "problem", "problem", true));
  const int n = cfg.problem.dim;

  const YAML::Node g = rd.map(root, "grid", "grid", true);
  rd.known_keys(g, "grid", {"nx", "nt", "cfl_target"});
  if (!g["nx"]) rd.fail(g, "grid.nx", "missing value");
  cfg.grid.nx = rd.int_list(g["nx"], "grid.nx");
  if (static_cast<int>(cfg.grid.nx.size()) == 1 && n > 1)
    cfg.grid.nx.assign(n, cfg.grid.nx.front());
  if (static_cast<int>(cfg.grid.nx.size()) != n)
    rd.fail(g["nx"], "grid.nx", "expected one entry per dimension");
  for (int v : cfg.grid.nx)
    if (v < 1) rd.fail(g["nx"], "grid.nx", "entries must be >= 1");
  if (g["nt"]) {
    cfg.grid.nt = rd.scalar<int>(g["nt"], "grid.nt");
    if (*cfg.grid.nt < 1) rd.fail(g["nt"], "grid.nt", "must be >= 1");
  }
  cfg.grid.cfl_target = rd.optional<double>(g, "cfl_target", "grid.cfl_target", 0.5);
  if (!(cfg.grid.cfl_target > 0.0 && cfg.grid.cfl_target < 1.0))
    rd.fail(g["cfl_target"], "grid.cfl_target", "must lie in (0, 1)");

  if (const YAML::Node s = rd.map(root, "solver", "solver", false)) {
    rd.known_keys(s, "solver",
                  {"tolerance", "max_iterations", "initial_guess", "check_bounds"});
    cfg.solver.tolerance =
        rd.optional<double>(s, "tolerance", "solver.tolerance", 5e-7);
    if (!(cfg.solver.tolerance >= 0.0))
      rd.fail(s["tolerance"], "solver.tolerance", "must be >= 0");
    cfg.solver.max_iterations =
        rd.optional<int>(s, "max_iterations", "solver.max_iterations", 1000);
    if (cfg.solver.max_iterations < 1)
      rd.fail(s["max_iterations"], "solver.max_iterations", "must be >= 1");
    const auto guess = rd.optional<std::string>(s, "initial_guess",
                                                "solver.initial_guess",
                                                "initial_density");
    if (guess == "initial_density")
      cfg.solver.initial_guess = InitialGuess::initial_density;
    else if (guess == "zero")
      cfg.solver.initial_guess = InitialGuess::zero;
    else
      rd.fail(s["initial_guess"], "solver.initial_guess",
              "unknown policy '" + guess + "' (initial_density, zero)");
    cfg.solver.check_bounds =
        rd.optional<bool>(s, "check_bounds", "solver.check_bounds", true);
  }

  if (const YAML::Node o = rd.map(root, "output", "output", false)) {
    rd.known_keys(o, "output", {"directory", "stride", "formats"});
    cfg.output.directory =
        rd.optional<std::string>(o, "directory", "output.directory", "out");
    if (o["stride"]) {
      cfg.output.stride = rd.scalar<int>(o["stride"], "output.stride");
      if (*cfg.output.stride < 1)
        rd.fail(o["stride"], "output.stride", "must be >= 1");
    }
    if (const YAML::Node f = o["formats"]) {
      if (!f.IsSequence()) rd.fail(f, "output.formats", "expected a list");
      cfg.output.formats.clear();
      for (std::size_t i = 0; i < f.size(); ++i) {
        const auto name = rd.scalar<std::string>(f[i], "output.formats");
        if (name != "csv" && name != "json")
          rd.fail(f[i], "output.formats", "unknown format '" + name + "' (csv, json)");
        cfg.output.formats.push_back(name);
      }
    }
  }

  if (const YAML::Node s = rd.map(root, "sweep", "sweep", false)) {
    rd.known_keys(s, "sweep",
                  {"reference_nx", "reference_iterations", "iterations", "ladder",
                   "k_list", "k_nx"});
    if (s["reference_nx"]) {
      cfg.sweep.reference_nx = rd.int_list(s["reference_nx"], "sweep.reference_nx");
      if (cfg.sweep.reference_nx.size() == 1 && n > 1)
        cfg.sweep.reference_nx.assign(n, cfg.sweep.reference_nx.front());
      if (static_cast<int>(cfg.sweep.reference_nx.size()) != n)
        rd.fail(s["reference_nx"], "sweep.reference_nx",
                "expected one entry per dimension");
    }
    cfg.sweep.reference_iterations = rd.optional<int>(
        s, "reference_iterations", "sweep.reference_iterations", 1000);
    cfg.sweep.iterations = rd.optional<int>(s, "iterations", "sweep.iterations", 1000);
    if (cfg.sweep.reference_iterations < 1 || cfg.sweep.iterations < 1)
      rd.fail(s, "sweep", "iteration counts must be >= 1");
    if (const YAML::Node l = s["ladder"]) {
      if (!l.IsSequence()) rd.fail(l, "sweep.ladder", "expected a list");
      for (std::size_t i = 0; i < l.size(); ++i) {
        const std::string lf = "sweep.ladder[" + std::to_string(i) + "]";
        auto point = rd.int_list(l[i], lf);
        if (point.size() == 1 && n > 1) point.assign(n, point.front());
        if (static_cast<int>(point.size()) != n)
          rd.fail(l[i], lf, "expected one entry per dimension");
        cfg.sweep.ladder.push_back(point);
      }
    }
    if (s["k_list"]) cfg.sweep.k_list = rd.int_list(s["k_list"], "sweep.k_list");
    if (s["k_nx"]) {
      cfg.sweep.k_nx = rd.int_list(s["k_nx"], "sweep.k_nx");
      if (cfg.sweep.k_nx.size() == 1 && n > 1)
        cfg.sweep.k_nx.assign(n, cfg.sweep.k_nx.front());
      if (static_cast<int>(cfg.sweep.k_nx.size()) != n)
        rd.fail(s["k_nx"], "sweep.k_nx", "expected one entry per dimension");
    }
  }

  try {
    const Problem problem(cfg.problem);
    (void)problem;
  } catch (const std::invalid_argument& e) {
    rd.fail(root["problem"], "problem", e.what());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path);
}

std::string dump_config(const RunConfig& cfg) {
  const ProblemSpec& s = cfg.problem;
  YAML::Node root;

  YAML::Node p;
  p["dim"] = s.dim;
  p["horizon"] = s.horizon;
  YAML::Node drift;
  if (const auto* lin = std::get_if<LinearDrift>(&s.drift)) {
    drift["type"] = "linear";
    drift["a"] = emit_matrix(lin->a);
  } else if (std::holds_alternative<ZeroDrift>(s.drift)) {
    drift["type"] = "zero";
  } else {
    throw ConfigError("tabulated drift cannot be written to a config file");
  }
  p["drift"] = drift;
  YAML::Node cost = emit_state_cost(s.cost.state);
  cost["congestion"] = s.cost.congestion;
  p["cost"] = cost;
  p["sigma"] = emit_matrix(s.sigma);
  p["b"] = emit_matrix(s.b);
  p["r"] = emit_matrix(s.r);
  p["terminal_cost"] = emit_state_cost(s.terminal_cost);
  YAML::Node m0;
  switch (s.initial_density.kind) {
    case InitialDensity::Kind::uniform:
      m0["kind"] = "uniform";
      break;
    case InitialDensity::Kind::gaussian:
    case InitialDensity::Kind::bump:
      m0["kind"] = s.initial_density.kind == InitialDensity::Kind::gaussian
                       ? "gaussian"
                       : "bump";
      m0["mean"] = emit_vector(s.initial_density.mean);
      m0["covariance"] = emit_matrix(s.initial_density.covariance);
      break;
  }
  p["initial_density"] = m0;
  p["normalize_density"] = s.normalize_density;
  root["problem"] = p;

  YAML::Node g;
  g["nx"] = emit_ints(cfg.grid.nx);
  if (cfg.grid.nt) g["nt"] = *cfg.grid.nt;
  g["cfl_target"] = cfg.grid.cfl_target;
  root["grid"] = g;

  YAML::Node sv;
  sv["tolerance"] = cfg.solver.tolerance;
  sv["max_iterations"] = cfg.solver.max_iterations;
  sv["initial_guess"] = cfg.solver.initial_guess == InitialGuess::zero
                            ? "zero"
                            : "initial_density";
  sv["check_bounds"] = cfg.solver.check_bounds;
  root["solver"] = sv;

  YAML::Node o;
  o["directory"] = cfg.output.directory;
  if (cfg.output.stride) o["stride"] = *cfg.output.stride;
  YAML::Node formats;
  for (const auto& f : cfg.output.formats) formats.push_back(f);
  o["formats"] = flow(formats);
  root["output"] = o;

  YAML::Node sw;
  if (!cfg.sweep.reference_nx.empty())
    sw["reference_nx"] = emit_ints(cfg.sweep.reference_nx);
  sw["reference_iterations"] = cfg.sweep.reference_iterations;
  sw["iterations"] = cfg.sweep.iterations;
  if (!cfg.sweep.ladder.empty()) {
    YAML::Node l;
    for (const auto& pt : cfg.sweep.ladder) l.push_back(emit_ints(pt));
    sw["ladder"] = l;
  }
  if (!cfg.sweep.k_list.empty()) sw["k_list"] = emit_ints(cfg.sweep.k_list);
  if (!cfg.sweep.k_nx.empty()) sw["k_nx"] = emit_ints(cfg.sweep.k_nx);
  root["sweep"] = sw;

  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << root;
  return std::string(out.c_str()) + "\n";
}

void save_config(const RunConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError(path + ": cannot write config file");
  out << dump_config(config);
}

}  // namespace lsmfg
