#include "densim/experiment.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <thread>

#include "densim/format.hpp"
#include "densim/theory.hpp"

namespace densim::experiment {

void SimConfig::validate() const {
  if (graph_file.empty() && grid_file.empty() && (grid_rows <= 0 || grid_cols <= 0))
    throw std::invalid_argument("grid dimensions must be positive");
  if (n_people < 0 || n_sensors < 0) throw std::invalid_argument("agent counts must be >= 0");
  if (v_person < 1 || v_sensor < 1) throw std::invalid_argument("speeds must be >= 1");
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (bucket_coarsen < 1) throw std::invalid_argument("bucket_coarsen must be >= 1");
  if (error_stride < 1) throw std::invalid_argument("error_stride must be >= 1");
  if (tail < 1) throw std::invalid_argument("tail must be >= 1");
  SensingParams{p, lambda, radius}.validate();
}

SimConfig config_from_json(const nlohmann::json& j) {
  SimConfig cfg;
  const SimConfig defaults;
  cfg.grid_rows = j.value("grid_rows", defaults.grid_rows);
  cfg.grid_cols = j.value("grid_cols", defaults.grid_cols);
  cfg.grid_file = j.value("grid_file", defaults.grid_file);
  cfg.graph_file = j.value("graph_file", defaults.graph_file);
  cfg.n_people = j.value("n_people", defaults.n_people);
  cfg.n_sensors = j.value("n_sensors", defaults.n_sensors);
  cfg.v_person = j.value("v_person", defaults.v_person);
  cfg.v_sensor = j.value("v_sensor", defaults.v_sensor);
  cfg.radius = j.value("radius", defaults.radius);
  cfg.p = j.value("p", defaults.p);
  cfg.lambda = j.value("lambda", defaults.lambda);
  cfg.steps = j.value("steps", defaults.steps);
  cfg.bucket_coarsen = j.value("bucket_coarsen", defaults.bucket_coarsen);
  cfg.error_stride = j.value("error_stride", defaults.error_stride);
  cfg.tail = j.value("tail", defaults.tail);
  cfg.seed = j.value("seed", defaults.seed);
  for (const auto& [key, _] : j.items()) {
    static const char* known[] = {"grid_rows", "grid_cols", "grid_file",  "graph_file",
                                  "n_people",  "n_sensors", "v_person",   "v_sensor",
                                  "radius",    "p",         "lambda",     "steps",
                                  "bucket_coarsen", "error_stride", "tail", "seed"};
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw std::invalid_argument("unknown config key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

nlohmann::json config_to_json(const SimConfig& cfg) {
  return {{"grid_rows", cfg.grid_rows},
          {"grid_cols", cfg.grid_cols},
          {"grid_file", cfg.grid_file},
          {"graph_file", cfg.graph_file},
          {"n_people", cfg.n_people},
          {"n_sensors", cfg.n_sensors},
          {"v_person", cfg.v_person},
          {"v_sensor", cfg.v_sensor},
          {"radius", cfg.radius},
          {"p", cfg.p},
          {"lambda", cfg.lambda},
          {"steps", cfg.steps},
          {"bucket_coarsen", cfg.bucket_coarsen},
          {"error_stride", cfg.error_stride},
          {"tail", cfg.tail},
          {"seed", cfg.seed}};
}

SimConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(file.filename().string() + ": " + e.what());
  }
  return config_from_json(j);
}

namespace {

WorldGraph build_world(const SimConfig& cfg) {
  if (!cfg.graph_file.empty()) return load_graph(cfg.graph_file);
  if (!cfg.grid_file.empty()) {
    const GridMask mask = load_grid_mask(cfg.grid_file);
    return build_grid_world(mask.rows, mask.cols, mask);
  }
  return build_grid_world(cfg.grid_rows, cfg.grid_cols);
}

}  // namespace

RunResult run_simulation(const SimConfig& cfg) {
  cfg.validate();
  const WorldGraph g = build_world(cfg);
  Rng rng(mix64(cfg.seed));
  std::vector<Agent> agents =
      init_population(g, cfg.n_people, cfg.n_sensors, cfg.v_person, cfg.v_sensor, rng);
  const SensingParams params{cfg.p, cfg.lambda, cfg.radius};
  DensityField field(BucketMap::coarsened(g, cfg.bucket_coarsen));

  RunResult out;
  out.series.reserve(static_cast<std::size_t>(cfg.steps / cfg.error_stride) + 1);
  for (int step = 1; step <= cfg.steps; ++step) {
    for (Agent& a : agents) step_agent(a, g, rng);
    field.record_step(g, agents, params, rng);
    if (step % cfg.error_stride == 0 || step == cfg.steps) {
      const auto snap = field.snapshot();
      out.series.push_back({step, static_cast<std::int64_t>(cfg.n_sensors) * step,
                            theory::normalized_error(snap.psi, snap.phi)});
    }
  }
  auto snap = field.snapshot();
  out.psi = std::move(snap.psi);
  out.phi = std::move(snap.phi);
  const auto& map = field.buckets();
  out.bucket_x.resize(map.size());
  out.bucket_y.resize(map.size());
  out.samples.resize(map.size());
  for (int b = 0; b < map.size(); ++b) {
    out.bucket_x[b] = map.x(b);
    out.bucket_y[b] = map.y(b);
    out.samples[b] = field.samples(b);
  }
  return out;
}

double asymptotic_error(const DecaySeries& series, int tail) {
  if (series.empty()) throw std::invalid_argument("empty decay series");
  if (tail < 1) throw std::invalid_argument("tail must be >= 1");
  std::size_t n = static_cast<std::size_t>(tail);
  if (n > series.size()) {
    std::cerr << "decay series has " << series.size() << " points, shorter than tail " << tail
              << ", averaging all\n";
    n = series.size();
  }
  double sum = 0;
  for (std::size_t i = series.size() - n; i < series.size(); ++i) sum += series[i].error;
  return sum / static_cast<double>(n);
}

const SweepCell& SweepTable::cell(int p_index, int lambda_index) const {
  return cells[static_cast<std::size_t>(p_index) * lambda_values.size() + lambda_index];
}

SweepTable sweep(const SimConfig& base, const std::vector<double>& p_values,
                 const std::vector<double>& lambda_values, int runs_per_cell,
                 std::uint64_t seed_root, int jobs) {
  if (p_values.empty() || lambda_values.empty())
    throw std::invalid_argument("sweep needs non-empty value lists");
  if (runs_per_cell < 1) throw std::invalid_argument("runs_per_cell must be >= 1");
  if (jobs < 1) jobs = 1;

  SweepTable table;
  table.p_values = p_values;
  table.lambda_values = lambda_values;
  table.runs_per_cell = runs_per_cell;
  table.seed_root = seed_root;
  table.base = base;
  const std::size_t n_cells = p_values.size() * lambda_values.size();
  table.cells.resize(n_cells);

  struct Task {
    std::size_t cell;
    int run;
  };
  std::vector<Task> tasks;
  tasks.reserve(n_cells * static_cast<std::size_t>(runs_per_cell));
  for (std::size_t cell = 0; cell < n_cells; ++cell)
    for (int run = 0; run < runs_per_cell; ++run) tasks.push_back({cell, run});

  // Results land in slots keyed by (cell, run); worker scheduling cannot
  // change the assembled table.
  std::vector<RunResult> results(tasks.size());
  std::vector<std::string> failures(tasks.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&]() {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks.size()) return;
      const auto [cell, run] = tasks[t];
      const int pi = static_cast<int>(cell / lambda_values.size());
      const int li = static_cast<int>(cell % lambda_values.size());
      SimConfig cfg = base;
      cfg.p = p_values[pi];
      cfg.lambda = lambda_values[li];
      cfg.seed = derive_seed(seed_root, {static_cast<std::uint64_t>(pi),
                                         static_cast<std::uint64_t>(li),
                                         static_cast<std::uint64_t>(run)});
      try {
        results[t] = run_simulation(cfg);
      } catch (const std::exception& e) {
        failures[t] = e.what();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const auto [cell, run] = tasks[t];
    SweepCell& c = table.cells[cell];
    if (run == 0) {
      c.p_index = static_cast<int>(cell / lambda_values.size());
      c.lambda_index = static_cast<int>(cell % lambda_values.size());
      c.p = p_values[c.p_index];
      c.lambda = lambda_values[c.lambda_index];
    }
    if (!failures[t].empty()) {
      if (c.error.empty()) c.error = "run " + std::to_string(run) + ": " + failures[t];
      continue;
    }
    c.runs.push_back(std::move(results[t].series));
    if (cell == 0 && run == 0) table.phi = results[t].phi;
  }

  for (SweepCell& c : table.cells) {
    if (!c.error.empty()) {
      c.runs.clear();
      continue;
    }
    c.n_runs = static_cast<int>(c.runs.size());
    const std::size_t len = c.runs.front().size();
    c.mean_curve.resize(len);
    for (std::size_t i = 0; i < len; ++i) {
      double sum = 0;
      for (const auto& run : c.runs) sum += run[i].error;
      c.mean_curve[i] = {c.runs.front()[i].step, c.runs.front()[i].cumulative_samples,
                         sum / static_cast<double>(c.n_runs)};
    }
    // Average the curves first, then take the tail mean.
    c.mean_asymptotic = asymptotic_error(c.mean_curve, base.tail);
    for (const auto& run : c.runs) c.run_asymptotics.push_back(asymptotic_error(run, base.tail));
    if (c.n_runs > 1) {
      double mean = 0;
      for (double v : c.run_asymptotics) mean += v;
      mean /= static_cast<double>(c.n_runs);
      double var = 0;
      for (double v : c.run_asymptotics) var += (v - mean) * (v - mean);
      c.std_asymptotic = std::sqrt(var / static_cast<double>(c.n_runs - 1));
    }
  }
  return table;
}

nlohmann::json compare_to_theory(const SweepTable& table, std::span<const double> phi) {
  const double h = theory::mean_density(phi);
  const double c = theory::shape_c(phi);
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& cell : table.cells) {
    nlohmann::json row{{"p", cell.p},
                       {"lambda", cell.lambda},
                       {"p_index", cell.p_index},
                       {"lambda_index", cell.lambda_index}};
    if (!cell.error.empty()) {
      row["error"] = cell.error;
      cells.push_back(row);
      continue;
    }
    const double sem =
        cell.n_runs > 1 ? cell.std_asymptotic / std::sqrt(static_cast<double>(cell.n_runs)) : 0.0;
    const double closed =
        cell.p > 0 ? theory::closed_form_error(cell.p, cell.lambda / h, c)
                   : theory::normalized_error(std::vector<double>(phi.size(), 1.0), phi);
    const double tight = cell.p > 0 ? theory::bound_tight(cell.p, cell.lambda, h, c) : HUGE_VAL;
    const double loose = cell.p > 0 ? theory::bound_loose(cell.p, cell.lambda, h) : HUGE_VAL;
    row["measured_mean"] = cell.mean_asymptotic;
    row["measured_std"] = cell.std_asymptotic;
    row["n_runs"] = cell.n_runs;
    row["sem"] = sem;
    row["closed_form"] = closed;
    row["bound_tight"] = tight;
    row["bound_loose"] = loose;
    row["exceeds_bound"] = cell.mean_asymptotic > loose;
    row["exceeds_bound_with_sem"] = cell.mean_asymptotic > loose + 3.0 * sem;
    cells.push_back(row);
  }
  return {{"h", h},
          {"c", c},
          {"r_buckets", phi.size()},
          {"tail", table.base.tail},
          {"cells", cells}};
}

namespace {

void write_decay_csv(const DecaySeries& series, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "step,cumulative_samples,error\n";
  for (const auto& pt : series)
    out << pt.step << ',' << pt.cumulative_samples << ',' << io::fmt_g(pt.error) << '\n';
}

}  // namespace

void write_sweep_outputs(const SweepTable& table, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  for (std::size_t cell = 0; cell < table.cells.size(); ++cell) {
    const SweepCell& c = table.cells[cell];
    for (std::size_t run = 0; run < c.runs.size(); ++run)
      write_decay_csv(c.runs[run], out_dir / ("decay_" + std::to_string(cell) + "_" +
                                              std::to_string(run) + ".csv"));
  }
  std::ofstream sweep_csv(out_dir / "sweep.csv");
  if (!sweep_csv) throw std::runtime_error("cannot write sweep.csv");
  sweep_csv << "p,lambda,asymptotic_mean,asymptotic_std,n_runs,closed_form,bound_tight,"
               "bound_loose\n";
  const auto report = compare_to_theory(table, table.phi);
  for (const auto& row : report.at("cells")) {
    sweep_csv << io::fmt_g(row.at("p").get<double>()) << ','
              << io::fmt_g(row.at("lambda").get<double>()) << ',';
    if (row.contains("error")) {
      sweep_csv << ",,0,,,\n";
      continue;
    }
    sweep_csv << io::fmt_g(row.at("measured_mean").get<double>()) << ','
              << io::fmt_g(row.at("measured_std").get<double>()) << ','
              << row.at("n_runs").get<int>() << ',' << io::fmt_g(row.at("closed_form").get<double>())
              << ',' << io::fmt_g(row.at("bound_tight").get<double>()) << ','
              << io::fmt_g(row.at("bound_loose").get<double>()) << '\n';
  }
  sweep_csv.close();

  nlohmann::json doc = report;
  doc["config"] = config_to_json(table.base);
  doc["p_values"] = table.p_values;
  doc["lambda_values"] = table.lambda_values;
  doc["runs_per_cell"] = table.runs_per_cell;
  doc["seed_root"] = table.seed_root;
  std::ofstream report_json(out_dir / "report.json");
  if (!report_json) throw std::runtime_error("cannot write report.json");
  report_json << doc.dump(2) << '\n';
}

void write_run_outputs(const SimConfig& cfg, const RunResult& run,
                       const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_decay_csv(run.series, out_dir / "decay_0_0.csv");

  std::ofstream snap(out_dir / "snapshot.csv");
  if (!snap) throw std::runtime_error("cannot write snapshot.csv");
  snap << "bucket_id,x,y,psi,phi,k_x\n";
  for (std::size_t b = 0; b < run.phi.size(); ++b)
    snap << b << ',' << io::fmt_g(run.bucket_x[b]) << ',' << io::fmt_g(run.bucket_y[b]) << ','
         << io::fmt_g(run.psi[b]) << ',' << io::fmt_g(run.phi[b]) << ',' << run.samples[b] << '\n';
  snap.close();

  const double h = theory::mean_density(run.phi);
  const double c = theory::shape_c(run.phi);
  nlohmann::json doc{{"config", config_to_json(cfg)},
                     {"asymptotic_error", asymptotic_error(run.series, cfg.tail)},
                     {"h", h},
                     {"c", c},
                     {"closed_form", nlohmann::json()},
                     {"bound_loose", nlohmann::json()}};
  if (cfg.p > 0) {
    doc["closed_form"] = theory::closed_form_error(cfg.p, cfg.lambda / h, c);
    doc["bound_loose"] = theory::bound_loose(cfg.p, cfg.lambda, h);
  }
  std::ofstream summary(out_dir / "summary.json");
  if (!summary) throw std::runtime_error("cannot write summary.json");
  summary << doc.dump(2) << '\n';
}

}  // namespace densim::experiment
