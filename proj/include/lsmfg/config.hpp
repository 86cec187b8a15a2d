#pragma once

#include "lsmfg/fictitious.hpp"
#include "lsmfg/oracle.hpp"
#include "lsmfg/problem.hpp"

#include <optional>
#include <string>
#include <vector>

namespace lsmfg {

struct GridSection {
  std::vector<int> nx;         ///< N_l per dimension (2 N_l nodes)
  std::optional<int> nt;       ///< fixed step count, else from cfl_target
  double cfl_target = 0.5;
};

struct SolverSection {
  double tolerance = 5e-7;
  int max_iterations = 1000;
  InitialGuess initial_guess = InitialGuess::initial_density;
  bool check_bounds = true;
};

struct OutputSection {
  std::string directory = "out";
  std::optional<int> stride;  ///< time levels between exported snapshots
  std::vector<std::string> formats{"csv", "json"};

  bool wants(const std::string& format) const;
};

struct SweepSection {
  std::vector<int> reference_nx;
  int reference_iterations = 1000;
  int iterations = 1000;
  std::vector<std::vector<int>> ladder;
  std::vector<int> k_list;
  std::vector<int> k_nx;  ///< grid of the k study; defaults to grid.nx
};

struct RunConfig {
  ProblemSpec problem;
  GridSection grid;
  SolverSection solver;
  OutputSection output;
  SweepSection sweep;
  std::string source = "<config>";

  TimeRule time_rule() const;
  /// Export stride, defaulting to N_t / 10 (at least 1).
  int export_stride(const PeriodicGrid& grid) const;
  SolveOptions<double> solve_options() const;
  DxStudySpec dx_study() const;
  KStudySpec k_study() const;
};

/// Parse a YAML document. Errors name the source, the line and the field.
RunConfig parse_config(const std::string& text,
                       const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

/// YAML text that parses back to an equivalent configuration.
std::string dump_config(const RunConfig& config);
void save_config(const RunConfig& config, const std::string& path);

}  // namespace lsmfg
