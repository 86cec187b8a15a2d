#include "lsmfg/config.hpp"
#include "lsmfg/errors.hpp"
#include "lsmfg/validation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace lsmfg;

namespace {

enum ExitCode { kOk = 0, kError = 1, kNotConverged = 2, kValidationFailed = 3 };

struct Flags {
  std::string config;
  std::string out;
  int threads = 0;
  bool log_json = false;
  std::string ladder;
  std::string k_list;
  bool mutate_upwind = false;
  int campaign = 100;
};

// json has no infinities; write them as strings
json finite_or_text(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

void log_event(const Flags& flags, const json& event) {
  if (flags.log_json) std::cerr << event.dump() << '\n';
}

fs::path output_dir(const Flags& flags, const RunConfig& cfg) {
  fs::path dir = flags.out.empty() ? fs::path(cfg.output.directory) : fs::path(flags.out);
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::vector<int> parse_ints(const std::string& text, const char* what) {
  std::vector<int> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size())
      throw ConfigError(std::string(what) + ": not an integer: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_output(path);
  out << std::setw(2) << j << '\n';
}

int cmd_solve(const Flags& flags) {
  const RunConfig cfg = load_config(flags.config);
  const Problem problem(cfg.problem);
  const PeriodicGrid grid = make_grid(problem, cfg.grid.nx, cfg.time_rule());

  SolveOptions<double> options = cfg.solve_options();
  if (flags.log_json)
    options.on_iteration = [&](const IterationRecord& r) {
      log_event(flags, {{"event", "iteration"},
                        {"k", r.k},
                        {"residual", r.residual},
                        {"backward_s", r.backward_seconds},
                        {"forward_s", r.forward_seconds},
                        {"psi_min", r.psi_min},
                        {"psi_max", r.psi_max},
                        {"psitilde_min", r.psitilde_min},
                        {"psitilde_max", r.psitilde_max},
                        {"bound_violations", r.bound_violations},
                        {"mass_drift", r.mass_drift}});
    };
  log_event(flags, {{"event", "start"},
                    {"config", flags.config},
                    {"nodes", grid.node_count()},
                    {"time_steps", grid.time_steps()}});
  const SolveReport<double> report = run(problem, grid, options);

  const fs::path dir = output_dir(flags, cfg);
  const std::vector<int> levels = export_levels(grid, cfg.export_stride(grid));
  if (cfg.output.wants("csv")) {
    {
      auto out = open_output(dir / "density.csv");
      write_field_csv(out, report.density, levels, "m");
    }
    {
      auto out = open_output(dir / "value.csv");
      write_field_csv(out, report.value, levels, "v");
    }
    {
      std::vector<std::string> names;
      for (std::size_t c = 0; c < report.control.size(); ++c)
        names.push_back("a" + std::to_string(c + 1));
      auto out = open_output(dir / "control.csv");
      write_fields_csv(out, report.control, levels, names);
    }
    {
      auto out = open_output(dir / "residuals.csv");
      out << std::setprecision(17)
          << "k,residual,backward_seconds,forward_seconds,wall_seconds,"
             "psi_min,psi_max,psitilde_min,psitilde_max,bound_violations,"
             "mass_drift\n";
      for (const auto& r : report.history)
        out << r.k << ',' << r.residual << ',' << r.backward_seconds << ','
            << r.forward_seconds << ',' << r.wall_seconds << ',' << r.psi_min
            << ',' << r.psi_max << ',' << r.psitilde_min << ','
            << r.psitilde_max << ',' << r.bound_violations << ','
            << r.mass_drift << '\n';
    }
  }

  const json summary = {
      {"config", flags.config},
      {"cfl_lhs", report.cfl_lhs},
      {"lambda", report.lambda},
      {"dx", grid.dx(0)},
      {"dt", grid.dt()},
      {"time_steps", grid.time_steps()},
      {"iterations", report.iterations},
      {"converged", report.converged},
      {"final_residual",
       report.history.empty() ? 0.0 : report.history.back().residual},
      {"total_seconds", report.total_seconds},
      {"diagnostics",
       {{"bound_violations", report.diagnostics.bound_violations},
        {"first_bound_violation", report.diagnostics.first_bound_violation},
        {"underflow_clamps", report.diagnostics.clamp_count},
        {"max_mass_drift",
         report.diagnostics.mass_drift.empty()
             ? 0.0
             : report.diagnostics.mass_drift.back()},
        {"log_gamma_min", finite_or_text(report.bounds.log_gamma_min)},
        {"log_gamma_max", finite_or_text(report.bounds.log_gamma_max)},
        {"log_gamma_tilde_max", finite_or_text(report.bounds.log_gamma_tilde_max)}}}};
  if (cfg.output.wants("json")) write_json(dir / "summary.json", summary);
  log_event(flags, {{"event", "done"}, {"summary", summary}});

  std::cout << (report.converged ? "converged" : "not converged") << " after "
            << report.iterations << " iterations, residual "
            << summary["final_residual"].get<double>() << ", CFL lhs "
            << report.cfl_lhs << "\noutput: " << dir.string() << '\n';
  return report.converged ? kOk : kNotConverged;
}

int cmd_sweep_dx(const Flags& flags) {
  RunConfig cfg = load_config(flags.config);
  if (!flags.ladder.empty()) {
    cfg.sweep.ladder.clear();
    for (int v : parse_ints(flags.ladder, "--ladder"))
      cfg.sweep.ladder.push_back(std::vector<int>(cfg.problem.dim, v));
  }
  if (cfg.sweep.reference_nx.empty())
    throw ConfigError(cfg.source + ": sweep.reference_nx: missing value");
  const Problem problem(cfg.problem);
  const RefinementLadder ladder = sweep_dx(problem, cfg.dx_study());

  const fs::path dir = output_dir(flags, cfg);
  {
    auto out = open_output(dir / "sweep_dx.csv");
    write_ladder_csv(out, ladder);
  }
  write_json(dir / "sweep_dx.json",
             {{"order", ladder.fit.slope}, {"intercept", ladder.fit.intercept}});
  write_ladder_csv(std::cout, ladder);
  std::cout << "fitted order " << ladder.fit.slope << '\n';
  log_event(flags, {{"event", "sweep-dx"}, {"order", ladder.fit.slope}});
  return kOk;
}

int cmd_sweep_k(const Flags& flags) {
  RunConfig cfg = load_config(flags.config);
  if (!flags.k_list.empty()) cfg.sweep.k_list = parse_ints(flags.k_list, "--k-list");
  if (cfg.sweep.k_list.empty()) throw std::invalid_argument("k list is empty");
  const Problem problem(cfg.problem);
  const std::vector<KStudyPoint> points = sweep_k(problem, cfg.k_study());

  const fs::path dir = output_dir(flags, cfg);
  {
    auto out = open_output(dir / "sweep_k.csv");
    write_k_study_csv(out, points);
  }
  write_k_study_csv(std::cout, points);
  if (points.size() >= 3) {
    std::vector<double> k, le;
    for (const auto& p : points)
      if (p.error > 0.0) {
        k.push_back(p.k);
        le.push_back(std::log(p.error));
      }
    if (k.size() >= 2)
      std::cout << "log-linear slope " << fit_line(k, le).slope << " per iteration\n";
  }
  return kOk;
}

int cmd_validate(const Flags& flags) {
  ValidationOptions options;
  options.flip_upwind = flags.mutate_upwind;
  options.campaign_size = flags.campaign;
  const auto results = run_validation(options);
  bool all = true;
  std::size_t width = 0;
  for (const auto& r : results) width = std::max(width, r.name.size());
  for (const auto& r : results) {
    all = all && r.passed;
    std::cout << (r.passed ? "PASS  " : "FAIL  ") << std::left
              << std::setw(static_cast<int>(width) + 2) << r.name << r.detail
              << '\n';
    log_event(flags, {{"event", "check"},
                      {"name", r.name},
                      {"passed", r.passed},
                      {"detail", r.detail}});
  }
  std::cout << (all ? "all checks passed" : "validation FAILED") << '\n';
  return all ? kOk : kValidationFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linearly solvable mean field game solver"};
  app.require_subcommand(1);
  Flags flags;

  auto common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", flags.config, "YAML run configuration");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--out", flags.out, "output directory (overrides the config)");
    sub->add_option("--threads", flags.threads, "worker threads")
        ->check(CLI::NonNegativeNumber);
    sub->add_flag("--log-json", flags.log_json, "JSON-lines progress on stderr");
  };

  auto* solve = app.add_subcommand("solve", "run fictitious play on one config");
  common(solve, true);
  auto* sweep_dx_cmd = app.add_subcommand("sweep-dx", "grid refinement study");
  common(sweep_dx_cmd, true);
  sweep_dx_cmd->add_option("--ladder", flags.ladder,
                           "comma-separated N per dimension, coarse to fine");
  auto* sweep_k_cmd = app.add_subcommand("sweep-k", "error against iteration count");
  common(sweep_k_cmd, true);
  sweep_k_cmd->add_option("--k-list", flags.k_list, "comma-separated, increasing");
  auto* validate = app.add_subcommand("validate", "run the oracle suite");
  common(validate, false);
  validate->add_option("--campaign", flags.campaign, "random bound-check problems")
      ->check(CLI::PositiveNumber);
  validate->add_flag("--mutate-upwind", flags.mutate_upwind,
                     "deliberately break the upwind sign (the suite must fail)");

  CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
  if (flags.threads > 0) omp_set_num_threads(flags.threads);
#endif

  try {
    if (*solve) return cmd_solve(flags);
    if (*sweep_dx_cmd) return cmd_sweep_dx(flags);
    if (*sweep_k_cmd) return cmd_sweep_k(flags);
    if (*validate) return cmd_validate(flags);
  } catch (const CflViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    log_event(flags, {{"event", "error"}, {"kind", "cfl"}, {"lhs", e.lhs()}});
    return kError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    log_event(flags, {{"event", "error"}, {"message", e.what()}});
    return kError;
  }
  return kError;
}
