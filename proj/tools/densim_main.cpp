#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "densim/aggregation.hpp"
#include "densim/calibration.hpp"
#include "densim/experiment.hpp"
#include "densim/format.hpp"
#include "densim/parse.hpp"
#include "densim/theory.hpp"

namespace {

using densim::experiment::SimConfig;

std::vector<double> parse_value_list(const std::string& csv, const std::string& what) {
  std::vector<double> out;
  for (const auto& field : densim::io::split(csv, ','))
    out.push_back(densim::io::to_double(field, what, 1, "value"));
  if (out.empty()) throw std::runtime_error(what + " list is empty");
  return out;
}

// phi column of a snapshot written by `simulate`
std::vector<double> load_snapshot_phi(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  const std::string where = file.filename().string();
  std::string line;
  if (!std::getline(in, line) ||
      std::string(densim::io::trim(line)) != "bucket_id,x,y,psi,phi,k_x")
    throw std::runtime_error(where + ": first line must be the snapshot header");
  std::vector<double> phi;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (densim::io::trim(line).empty()) continue;
    const auto f = densim::io::split(line, ',');
    if (f.size() != 6) densim::io::fail_at(where, lineno, "expected 6 columns");
    phi.push_back(densim::io::to_double(f[4], where, lineno, "phi"));
  }
  return phi;
}

int cmd_simulate(const std::string& config_file, std::uint64_t seed, bool seed_set,
                 const std::string& out_dir) {
  SimConfig cfg = densim::experiment::load_config(config_file);
  if (seed_set) cfg.seed = seed;
  const auto run = densim::experiment::run_simulation(cfg);
  densim::experiment::write_run_outputs(cfg, run, out_dir);
  std::cout << "asymptotic_error "
            << densim::io::fmt_g(densim::experiment::asymptotic_error(run.series, cfg.tail))
            << '\n';
  return 0;
}

int cmd_sweep(const std::string& config_file, const std::string& p_csv,
              const std::string& lambda_csv, int runs, std::uint64_t seed_root, int jobs,
              const std::string& out_dir) {
  const SimConfig base = densim::experiment::load_config(config_file);
  const auto table =
      densim::experiment::sweep(base, parse_value_list(p_csv, "--p"),
                                parse_value_list(lambda_csv, "--lambda"), runs, seed_root, jobs);
  densim::experiment::write_sweep_outputs(table, out_dir);
  bool failed = false;
  for (const auto& cell : table.cells)
    if (!cell.error.empty()) {
      std::cerr << "cell (" << cell.p << ", " << cell.lambda << ") failed: " << cell.error << '\n';
      failed = true;
    }
  std::cout << "wrote " << out_dir << "/sweep.csv and report.json\n";
  return failed ? 1 : 0;
}

int cmd_theory(double p, double lambda, double h, double c, const std::string& snapshot) {
  namespace theory = densim::theory;
  if (!snapshot.empty()) {
    const auto phi = load_snapshot_phi(snapshot);
    h = theory::mean_density(phi);
    c = theory::shape_c(phi);
  }
  nlohmann::json doc{{"p", p},
                     {"lambda", lambda},
                     {"h", h},
                     {"c", c},
                     {"closed_form", theory::closed_form_error(p, lambda / h, c)},
                     {"bound_tight", theory::bound_tight(p, lambda, h, c)},
                     {"bound_loose", theory::bound_loose(p, lambda, h)}};
  const double h_hat = p * h + lambda;
  doc["h_hat_expected"] = h_hat;
  if (h_hat > lambda) doc["bound_from_sampled_density"] =
      theory::bound_from_sampled_density(lambda, h_hat);
  std::cout << doc.dump(2) << '\n';
  return 0;
}

int cmd_aggregate(const std::string& records_file, const std::string& segments_file,
                  double spacing, double max_distance, long utc_offset_minutes, bool strict,
                  const std::string& out_dir) {
  namespace agg = densim::agg;
  const auto load = agg::load_records(records_file, strict);
  for (const auto& msg : load.rejected) std::cerr << "rejected: " << msg << '\n';
  const auto segments = agg::load_segments(segments_file);
  const auto index = agg::SegmentIndex::build(segments, spacing);
  const auto result = agg::aggregate(load.records, index, max_distance);
  const auto hist = agg::temporal_histograms(load.records, utc_offset_minutes);

  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  agg::export_heatmap(result.stats, segments, dir / "heatmap.geojson");
  agg::export_heatmap_csv(result.stats, dir / "segments.csv");
  {
    std::ofstream out(dir / "by_hour.csv");
    out << "hour,records\n";
    for (std::size_t i = 0; i < hist.by_hour.size(); ++i)
      out << i << ',' << hist.by_hour[i] << '\n';
  }
  {
    std::ofstream out(dir / "by_weekday.csv");
    out << "weekday,records\n";
    for (std::size_t i = 0; i < hist.by_weekday.size(); ++i)
      out << i << ',' << hist.by_weekday[i] << '\n';
  }
  nlohmann::json doc{{"n_records", load.records.size()},
                     {"n_rejected_rows", load.rejected.size()},
                     {"n_assigned", load.records.size() - result.n_dropped},
                     {"n_dropped", result.n_dropped},
                     {"n_segments_with_records", result.stats.size()},
                     {"spacing_m", spacing},
                     {"max_distance_m", max_distance},
                     {"utc_offset_minutes", utc_offset_minutes}};
  std::ofstream report(dir / "report.json");
  report << doc.dump(2) << '\n';
  std::cout << "assigned " << (load.records.size() - result.n_dropped) << "/"
            << load.records.size() << " records to " << result.stats.size() << " segments\n";
  return 0;
}

int cmd_calibrate(const std::string& detections_file, const std::string& gt_file, double score_min,
                  double min_height, double iou_min, const std::string& out_dir) {
  namespace calib = densim::calib;
  const auto dets = calib::load_detections(detections_file);
  const auto gts = calib::load_ground_truth(gt_file);

  std::vector<double> thresholds;
  for (int i = 0; i <= 10; ++i) thresholds.push_back(i / 10.0);
  const auto curve = calib::pr_curve(dets, gts, thresholds, min_height, iou_min);

  // Per-image (true count, measured count) at the operating point.
  std::vector<std::pair<double, double>> pairs;
  double measured_sum = 0;
  std::vector<std::string> images;
  for (const auto& [id, _] : gts) images.push_back(id);
  for (const auto& [id, _] : dets)
    if (!gts.count(id)) images.push_back(id);
  for (const auto& id : images) {
    double truth = 0, measured = 0;
    if (auto it = gts.find(id); it != gts.end())
      for (const auto& box : it->second)
        if (box.height() >= min_height) truth += 1;
    if (auto it = dets.find(id); it != dets.end())
      for (const auto& det : it->second)
        if (det.box.height() >= min_height && det.score >= score_min) measured += 1;
    pairs.emplace_back(truth, measured);
    measured_sum += measured;
  }
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  {
    std::ofstream out(dir / "pr.csv");
    out << "threshold,precision,recall\n";
    for (const auto& pt : curve)
      out << densim::io::fmt_g(pt.threshold) << ',' << densim::io::fmt_g(pt.precision) << ','
          << densim::io::fmt_g(pt.recall) << '\n';
  }
  nlohmann::json doc{{"n_images", pairs.size()},
                     {"score_min", score_min},
                     {"min_height", min_height},
                     {"iou_min", iou_min}};
  if (pairs.size() >= 2) {
    try {
      const auto fit = calib::fit_sensing_params(pairs);
      const auto rep = calib::calibration_report(
          fit, measured_sum / static_cast<double>(pairs.size()));
      doc["p"] = rep.p;
      doc["lambda"] = rep.lambda;
      doc["stderr_p"] = rep.stderr_p;
      doc["stderr_lambda"] = rep.stderr_lambda;
      doc["h_hat"] = rep.h_hat;
      doc["h_unbiased"] = rep.h_unbiased;
      doc["bound"] = rep.bound;
      doc["bound_informative"] = rep.bound_informative;
    } catch (const std::exception& e) {
      doc["fit_error"] = e.what();
    }
  }
  std::ofstream report(dir / "report.json");
  report << doc.dump(2) << '\n';
  std::cout << "wrote " << out_dir << "/pr.csv and report.json\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"density estimation from imperfect mobile sensors"};
  app.require_subcommand(1);

  std::string config_file, out_dir = "out";
  std::uint64_t seed = 0;
  auto* simulate = app.add_subcommand("simulate", "single seeded run");
  simulate->add_option("--config", config_file, "JSON config")->required();
  auto* seed_opt = simulate->add_option("--seed", seed, "override the config seed");
  simulate->add_option("--out", out_dir, "output directory");

  std::string p_csv, lambda_csv;
  int runs = 5, jobs = 1;
  std::uint64_t seed_root = 1;
  auto* sweep = app.add_subcommand("sweep", "(p, lambda) grid of seeded runs");
  sweep->add_option("--config", config_file, "JSON config")->required();
  sweep->add_option("--p", p_csv, "comma-separated p values")->required();
  sweep->add_option("--lambda", lambda_csv, "comma-separated lambda values")->required();
  sweep->add_option("--runs", runs, "runs per cell");
  sweep->add_option("--seed-root", seed_root, "root seed for per-run derivation");
  sweep->add_option("--jobs", jobs, "worker threads");
  sweep->add_option("--out", out_dir, "output directory");

  double p = 0.5, lambda = 0.1, h = 1.0, c = 1.0;
  std::string snapshot;
  auto* theory = app.add_subcommand("theory", "closed form and bounds");
  theory->set_help_flag("--help", "print help");  // frees -h for the density option
  theory->add_option("--p", p, "true-positive rate");
  theory->add_option("--lambda", lambda, "expected false positives");
  theory->add_option("--h", h, "mean density");
  theory->add_option("--c", c, "shape parameter");
  theory->add_option("--snapshot", snapshot, "derive h and c from a snapshot CSV");

  std::string records_file, segments_file;
  double spacing = 5.0, max_distance = 30.0;
  long utc_offset_minutes = 0;
  bool strict = false;
  auto* aggregate = app.add_subcommand("aggregate", "assign records to street segments");
  aggregate->add_option("--records", records_file, "records CSV")->required();
  aggregate->add_option("--segments", segments_file, "segments GeoJSON or CSV")->required();
  aggregate->add_option("--spacing", spacing, "densification spacing in meters");
  aggregate->add_option("--max-distance", max_distance, "drop records farther than this");
  aggregate->add_option("--utc-offset-minutes", utc_offset_minutes,
                        "shift timestamps before temporal bucketing");
  aggregate->add_flag("--strict", strict, "fail on the first malformed row");
  aggregate->add_option("--out", out_dir, "output directory");

  std::string detections_file, gt_file;
  double score_min = 0.7, min_height = 120.0, iou_min = 0.5;
  auto* calibrate = app.add_subcommand("calibrate", "evaluate detections and fit (p, lambda)");
  calibrate->add_option("--detections", detections_file, "detections CSV")->required();
  calibrate->add_option("--ground-truth", gt_file, "ground-truth CSV")->required();
  calibrate->add_option("--score-min", score_min, "operating-point score threshold");
  calibrate->add_option("--min-height", min_height, "height filter in pixels");
  calibrate->add_option("--iou-min", iou_min, "match threshold");
  calibrate->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);
  try {
    if (simulate->parsed())
      return cmd_simulate(config_file, seed, seed_opt->count() > 0, out_dir);
    if (sweep->parsed())
      return cmd_sweep(config_file, p_csv, lambda_csv, runs, seed_root, jobs, out_dir);
    if (theory->parsed()) return cmd_theory(p, lambda, h, c, snapshot);
    if (aggregate->parsed())
      return cmd_aggregate(records_file, segments_file, spacing, max_distance, utc_offset_minutes,
                           strict, out_dir);
    if (calibrate->parsed())
      return cmd_calibrate(detections_file, gt_file, score_min, min_height, iou_min, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
