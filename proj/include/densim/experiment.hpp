#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "densim/sensing.hpp"

namespace densim::experiment {

struct SimConfig {
  // World: explicit graph file wins over an obstacle layout, which wins over
  // an open grid of the given dimensions.
  int grid_rows = 40;
  int grid_cols = 40;
  std::string grid_file;
  std::string graph_file;

  int n_people = 200;
  int n_sensors = 20;
  int v_person = 1;
  int v_sensor = 3;
  double radius = 1.0;
  double p = 1.0;
  double lambda = 0.0;
  int steps = 5000;
  int bucket_coarsen = 1;
  int error_stride = 1;
  int tail = 200;
  std::uint64_t seed = 1;

  void validate() const;  // throws std::invalid_argument
};

SimConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const SimConfig& cfg);
SimConfig load_config(const std::filesystem::path& file);

struct DecayPoint {
  std::int64_t step;                // 1-based tick index
  std::int64_t cumulative_samples;  // sensor samples taken so far
  double error;                     // normalized metric of the running snapshot
};
using DecaySeries = std::vector<DecayPoint>;

struct RunResult {
  DecaySeries series;
  std::vector<double> psi, phi;  // final snapshot
  std::vector<double> bucket_x, bucket_y;
  std::vector<std::uint64_t> samples;  // k_x per bucket
};

// Deterministic in (cfg, cfg.seed): one world, one agent population, `steps`
// ticks of movement + sensing, error recorded every `error_stride` ticks.
RunResult run_simulation(const SimConfig& cfg);

// Mean of the last `tail` recorded errors (all of them when shorter, with a
// note on stderr). Throws on an empty series.
double asymptotic_error(const DecaySeries& series, int tail = 200);

struct SweepCell {
  int p_index = 0, lambda_index = 0;
  double p = 0, lambda = 0;
  int n_runs = 0;
  double mean_asymptotic = 0;  // tail-mean of the run-averaged curve
  double std_asymptotic = 0;   // sample std of per-run asymptotics
  std::vector<double> run_asymptotics;
  std::vector<DecaySeries> runs;
  DecaySeries mean_curve;
  std::string error;  // non-empty when the cell failed
};

struct SweepTable {
  std::vector<double> p_values, lambda_values;
  int runs_per_cell = 0;
  std::uint64_t seed_root = 0;
  SimConfig base;
  std::vector<SweepCell> cells;  // row-major: p_index * lambda_values.size() + lambda_index
  std::vector<double> phi;       // final snapshot of run (0,0,0), the theory reference

  const SweepCell& cell(int p_index, int lambda_index) const;
};

// Per-run seeds come from derive_seed(seed_root, {p_index, lambda_index,
// run_index}), so any `jobs` level produces identical tables.
SweepTable sweep(const SimConfig& base, const std::vector<double>& p_values,
                 const std::vector<double>& lambda_values, int runs_per_cell,
                 std::uint64_t seed_root, int jobs = 1);

// Per cell: measured mean/std/sem, closed form, both bounds, exceedance flags.
nlohmann::json compare_to_theory(const SweepTable& table, std::span<const double> phi);

// decay_<cell>_<run>.csv for every run, sweep.csv, report.json.
void write_sweep_outputs(const SweepTable& table, const std::filesystem::path& out_dir);

// decay_0_0.csv, snapshot.csv, summary.json for a single run.
void write_run_outputs(const SimConfig& cfg, const RunResult& run,
                       const std::filesystem::path& out_dir);

}  // namespace densim::experiment
