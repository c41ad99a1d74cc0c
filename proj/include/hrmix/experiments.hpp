#pragma once

#include "hrmix/robustness.hpp"
#include "hrmix/stokes.hpp"
#include "hrmix/transient.hpp"

#include <map>
#include <string>
#include <vector>

namespace hrmix {

/// One experiment: a case, a scheme list, a delta sweep and a mesh chain.
struct ExperimentConfig {
  std::string case_name = "rigid_body_motion";
  std::vector<std::string> schemes = {"jm"};
  std::vector<double> deltas = {10.0, 1e3, 1e5};
  int levels = 4;  // refinement levels 0 .. levels-1
  int n = 8;
  double jitter = 0.2;
  std::uint64_t seed = 42;
  std::string mode = "convergence";  // convergence | robustness | transient | stokes
  double dt = 0.01;
  double t_end = 1.5;
};

/// Throws std::invalid_argument on incompatible (case, scheme) pairs.
void validate_config(const ExperimentConfig& config);

/// Flat key-value sections:  [name] / key = value  lines.
std::vector<ExperimentConfig> parse_config_file(const std::string& path);

/// Shortest round-trip decimal (errors) and fixed one-decimal (delta column).
std::string format_shortest(double v);
std::string format_delta(double v);

struct CsvFile {
  std::string name;
  int rows = 0;
};

/// Convergence sweep; writes <case>_<scheme>.csv per scheme into out_dir and
/// returns the produced files. Rows carry the paper's exact column names.
std::vector<CsvFile> run_convergence(const ExperimentConfig& config, const std::string& out_dir);

/// Stokes sweep (no_flow_sv.csv / no_flow_ht.csv).
std::vector<CsvFile> run_stokes(const ExperimentConfig& config, const std::string& out_dir);

/// Robustness reports for the four elasticity schemes on coarse levels.
std::vector<CsvFile> run_robustness(const ExperimentConfig& config, const std::string& out_dir);

/// Transient series (t, sigma_l2) plus snapshot tables at t = 0.5, 1.0, 1.5.
std::vector<CsvFile> run_transient_series(const ExperimentConfig& config,
                                          const std::string& out_dir);

/// Observed-rate table (markdown) from a convergence CSV; near-roundoff rows
/// are flagged "floor" instead of a rate.
std::string rate_table(const std::string& csv_path);

struct RosterOptions {
  int base_n = 8;
  int polar_n = 32;
  int transient_n = 20;
  int max_levels = 1 << 20;  // cap on every experiment's level count
  double dt = 0.01;
  double t_end = 1.5;
  double jitter = 0.2;
  std::uint64_t seed = 42;
};

/// The full benchmark roster; writes every data file plus manifest.txt and
/// returns the file list in manifest order.
std::vector<CsvFile> run_all_paper_experiments(const std::string& out_dir,
                                               const RosterOptions& opts = {});

}  // namespace hrmix
