#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "starmec/baselines.hpp"
#include "starmec/channel.hpp"
#include "starmec/sca.hpp"

namespace starmec {

/// One experiment: a base system, a channel model, a protocol, one sweep
/// axis with its value list, and the Monte-Carlo seed list.
struct ExperimentConfig {
  SystemParams base;
  PathLossParams pathloss;
  GeometrySpec geometry;
  int k_r = 2;
  int k_t = 2;
  Protocol protocol = Protocol::Es;
  std::string sweep_axis = "P0";  // P0 | T | M | I | C | tau0-curve
  std::vector<double> sweep_values;
  std::uint64_t seed_base = 1;
  int seed_count = 1;
  SolveOptions solve;
  std::string output_path = "results";

  void validate() const;  // throws naming the offending field
};

ExperimentConfig load_config(const std::string& path);

struct RunRow {
  std::string protocol;
  std::string sweep_axis;
  double sweep_value = 0.0;
  std::uint64_t seed = 0;
  double total_bits = 0.0;
  int iterations = 0;
  bool converged = false;
  double tau0 = 0.0;
  double max_residual = 0.0;
};

struct SummaryRow {
  double sweep_value = 0.0;
  double mean_bits = 0.0;
  double std_bits = 0.0;
  int count = 0;
};

struct RunOutput {
  std::vector<RunRow> rows;
  std::vector<SummaryRow> summary;
};

/// Executes the full (sweep value x seed) table. Cells run in parallel;
/// output order and content depend only on the config, offset and the
/// sweep itself, never on scheduling.
RunOutput run_experiment(const ExperimentConfig& config,
                         std::uint64_t seed_offset = 0, int jobs = 0);

/// tau0 sweep of the configured protocol: one cell per (grid point, seed).
RunOutput run_tau0_curve(const ExperimentConfig& config,
                         std::uint64_t seed_offset = 0, int jobs = 0);

struct OracleRow {
  std::uint64_t seed = 0;
  double solver_bits = 0.0;
  double oracle_bits = 0.0;
  double rel_gap = 0.0;  // (solver - oracle) / oracle
};

/// Solver-versus-brute-force comparison on oracle-sized instances.
std::vector<OracleRow> run_oracle(const ExperimentConfig& config,
                                  std::uint64_t seed_offset = 0, int jobs = 0);

/// Writes `<path>.csv` and `<path>_summary.csv`; byte-identical output for
/// identical inputs.
void write_outputs(const RunOutput& out, const std::string& path);
void write_oracle_outputs(const std::vector<OracleRow>& rows,
                          const std::string& path);

/// Channel realization for one cell, derived deterministically from the
/// config seed.
ChannelSet make_channels(const ExperimentConfig& config,
                         const SystemParams& params, std::uint64_t seed);

/// Applies one sweep value to a copy of the base system.
SystemParams apply_sweep(const ExperimentConfig& config, double value, int* k_r,
                         int* k_t);

}  // namespace starmec
