// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "densim/calibration.hpp"
#include "densim/experiment.hpp"
#include "densim/rng.hpp"
#include "densim/theory.hpp"
#include "densim/world_graph.hpp"
#include "dijkstra_oracle.hpp"

#include "densim/aggregation.hpp"

using namespace densim;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
  std::printf("%s criterion %2d: %s\n", ok ? "PASS" : "FAIL", criterion, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

void info(const std::string& line) {
  std::printf("      %s\n", line.c_str());
  std::fflush(stdout);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void criterion_1() {
  const double bound = theory::bound_from_sampled_density(0.117, 0.587);
  const bool ok = std::abs(bound - 0.0622) <= 0.0005;
  report(1, ok, "bound_from_sampled_density(0.117, 0.587) = " + fmt(bound) + " (target 0.0622 +- 0.0005)");
}

void criterion_2() {
  std::mt19937_64 rng(20240817);
  std::uniform_real_distribution<double> Up(0.01, 1.0);
  std::uniform_real_distribution<double> Ul(0.0, 3.0);
  std::uniform_real_distribution<double> Uphi(0.0, 10.0);
  std::uniform_int_distribution<int> Udim(2, 64);
  double worst = 0;
  int bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> phi(Udim(rng));
    double mass = 0;
    for (auto& v : phi) {
      v = Uphi(rng);
      mass += v;
    }
    if (mass == 0) phi[0] = 1.0;
    const double p = Up(rng), lambda = Ul(rng);
    std::vector<double> psi(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) psi[i] = p * phi[i] + lambda;
    const double direct = theory::normalized_error(psi, phi);
    const double closed =
        theory::closed_form_error(p, lambda / theory::mean_density(phi), theory::shape_c(phi));
    const double diff = std::abs(direct - closed);
    worst = std::max(worst, diff);
    if (diff > 1e-9) ++bad;
  }
  report(2, bad == 0, "closed form vs exact-expectation metric on 1000 random phi: worst |diff| = " +
                          fmt(worst) + (bad ? ", " + std::to_string(bad) + " over 1e-9" : ""));
}

void criterion_3() {
  int violations = 0;
  double worst_gap = 0;
  for (int pi = 0; pi < 10; ++pi) {
    const double p = 0.1 * (pi + 1);
    for (int si = 0; si < 20; ++si) {
      const double s = 0.01 + (2.0 - 0.01) * si / 19.0;
      for (int ci = 0; ci < 20; ++ci) {
        const double c = 1.001 + (std::sqrt(64.0) - 1.001) * ci / 19.0;
        const double closed = theory::closed_form_error(p, s, c);
        const double tight = theory::bound_tight(p, s, 1.0, c);
        const double loose = theory::bound_loose(p, s, 1.0);
        if (closed > tight + 1e-12 || tight > loose + 1e-12) {
          ++violations;
          worst_gap = std::max({worst_gap, closed - tight, tight - loose});
        }
      }
    }
  }
  report(3, violations == 0,
         violations == 0
             ? "closed_form <= bound_tight <= bound_loose on the 10x20x20 grid, no violations"
             : std::to_string(violations) + " chain violations, worst gap " + fmt(worst_gap));
}

experiment::SweepTable spec_sweep() {
  experiment::SimConfig base;
  base.grid_rows = 40;
  base.grid_cols = 40;
  base.n_people = 200;
  base.n_sensors = 20;
  base.v_person = 1;
  base.v_sensor = 3;
  base.radius = 1.0;
  base.steps = 5000;
  base.bucket_coarsen = 1;
  base.error_stride = 1;
  base.tail = 200;
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int jobs = static_cast<int>(std::min(8u, hw));
  return experiment::sweep(base, {0.2, 0.5, 1.0}, {0.0, 0.3, 0.6}, 5, 1, jobs);
}

void criteria_4_and_5() {
  const auto table = spec_sweep();
  const double h = theory::mean_density(table.phi);
  const double c = theory::shape_c(table.phi);
  info("sweep world: h_true = " + fmt(h) + ", c = " + fmt(c) + ", buckets = " +
       std::to_string(table.phi.size()));

  std::vector<std::string> bound_fails, closeness_fails, monotonicity_fails;
  for (const auto& cell : table.cells) {
    if (!cell.error.empty()) {
      bound_fails.push_back("cell (" + fmt(cell.p) + "," + fmt(cell.lambda) + ") failed: " +
                            cell.error);
      continue;
    }
    const double sem = cell.std_asymptotic / std::sqrt(static_cast<double>(cell.n_runs));
    const double loose = theory::bound_loose(cell.p, cell.lambda, h);
    const double closed = theory::closed_form_error(cell.p, cell.lambda / h, c);
    info("cell p=" + fmt(cell.p) + " lambda=" + fmt(cell.lambda) + ": measured " +
         fmt(cell.mean_asymptotic) + " +- " + fmt(sem) + " (sem), closed " + fmt(closed) +
         ", bound " + fmt(loose));
    if (!(cell.mean_asymptotic <= loose + 3.0 * sem))
      bound_fails.push_back("(" + fmt(cell.p) + "," + fmt(cell.lambda) + ") measured " +
                            fmt(cell.mean_asymptotic) + " > bound " + fmt(loose) + " + 3*" +
                            fmt(sem));
    if (!(std::abs(cell.mean_asymptotic - closed) <= 0.07))
      closeness_fails.push_back("(" + fmt(cell.p) + "," + fmt(cell.lambda) + ") |" +
                                fmt(cell.mean_asymptotic) + " - " + fmt(closed) + "| > 0.07");
  }
  for (std::size_t pi = 0; pi < table.p_values.size(); ++pi)
    for (std::size_t li = 0; li + 1 < table.lambda_values.size(); ++li) {
      const auto& lo = table.cell(static_cast<int>(pi), static_cast<int>(li));
      const auto& hi = table.cell(static_cast<int>(pi), static_cast<int>(li + 1));
      if (lo.error.empty() && hi.error.empty() &&
          !(hi.mean_asymptotic >= lo.mean_asymptotic - 0.02))
        monotonicity_fails.push_back("p=" + fmt(lo.p) + ": lambda " + fmt(lo.lambda) + " -> " +
                                     fmt(hi.lambda) + " drops " +
                                     fmt(lo.mean_asymptotic - hi.mean_asymptotic));
    }

  const bool ok4 = bound_fails.empty() && closeness_fails.empty() && monotonicity_fails.empty();
  std::string detail4 = "desk-scale sweep vs theory";
  if (!ok4) {
    detail4 += " -";
    if (!bound_fails.empty()) detail4 += " (a) " + std::to_string(bound_fails.size()) + " cells over bound";
    if (!closeness_fails.empty())
      detail4 += " (b) " + std::to_string(closeness_fails.size()) + " cells off closed form";
    if (!monotonicity_fails.empty())
      detail4 += " (c) " + std::to_string(monotonicity_fails.size()) + " monotonicity breaks";
  }
  report(4, ok4, detail4);
  for (const auto& s : bound_fails) info("4a: " + s);
  for (const auto& s : closeness_fails) info("4b: " + s);
  for (const auto& s : monotonicity_fails) info("4c: " + s);

  const auto& perfect = table.cell(2, 0);  // p = 1.0, lambda = 0.0
  const bool ok5 = perfect.error.empty() && perfect.mean_asymptotic <= 0.05;
  report(5, ok5, "perfect-sensor cell (p=1, lambda=0) asymptotic error = " +
                     fmt(perfect.mean_asymptotic) + " (target <= 0.05)");
}

void criterion_6() {
  Rng rng(606060);
  int checked = 0, agreed = 0;
  for (int trial = 0; trial < 100; ++trial) {
    WorldGraph g = [&] {
      for (;;) {
        const GridMask mask = testing::random_mask(30, 30, 0.3, rng);
        WorldGraph candidate = build_grid_world(30, 30, mask);
        if (candidate.node_count() >= 12) return candidate;
      }
    }();
    std::uniform_int_distribution<NodeId> pick(0, g.node_count() - 1);
    int pairs = 0, attempts = 0;
    while (pairs < 10 && ++attempts < 1000) {
      const NodeId src = pick(rng);
      const auto costs = testing::dijkstra_costs(g, src);
      std::vector<NodeId> reachable;
      for (NodeId v = 0; v < g.node_count(); ++v)
        if (v != src && std::isfinite(costs[v])) reachable.push_back(v);
      if (reachable.empty()) continue;
      for (int k = 0; k < 5 && pairs < 10; ++k) {
        std::uniform_int_distribution<std::size_t> pick_dst(0, reachable.size() - 1);
        const NodeId dst = reachable[pick_dst(rng)];
        const auto path = astar_path(g, src, dst);
        ++checked;
        ++pairs;
        if (path && std::abs(path_cost(g, *path) - costs[dst]) <= 1e-9) ++agreed;
      }
    }
  }
  report(6, checked == 1000 && agreed == checked,
         "A* vs Dijkstra on 100 random 30x30 grids: " + std::to_string(agreed) + "/" +
             std::to_string(checked) + " path costs agree");
}

void criterion_7() {
  using namespace densim::calib;
  std::map<std::string, std::vector<Detection>> dets{
      {"img",
       {{{0, 0, 10, 10}, 0.9}, {{20, 0, 30, 10}, 0.8}, {{60, 0, 70, 10}, 0.6}}}};
  std::map<std::string, std::vector<BBox>> gts{
      {"img", {{0, 0, 10, 10}, {20, 0, 30, 10}, {40, 0, 50, 10}}}};
  const auto curve = pr_curve(dets, gts, {0.5}, 0.0);
  const bool pr_ok = curve.size() == 1 && curve[0].precision == 2.0 / 3.0 &&
                     curve[0].recall == 2.0 / 3.0;

  const BBox a{0, 0, 10, 10};
  const bool iou_ok = iou(a, a) == 1.0 && iou(a, BBox{20, 20, 30, 30}) == 0.0 &&
                      std::abs(iou(a, BBox{0, 5, 10, 15}) - 1.0 / 3.0) <= 1e-12;
  report(7, pr_ok && iou_ok,
         std::string("2TP/1FP/1FN fixture: precision ") + fmt(curve[0].precision) + ", recall " +
             fmt(curve[0].recall) + "; iou unit cases " + (iou_ok ? "exact" : "off"));
}

void criterion_8() {
  int successes = 0;
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(881000 + seed);
    std::poisson_distribution<int> noise(0.117);
    std::vector<std::pair<double, double>> pairs;
    for (int i = 0; i < 480; ++i) pairs.push_back({0.0, static_cast<double>(noise(rng))});
    for (int i = 0; i < 120; ++i) {
      const int n = 4 + i % 9;
      std::binomial_distribution<int> seen(n, 0.54);
      pairs.push_back({static_cast<double>(n), static_cast<double>(seen(rng) + noise(rng))});
    }
    const auto fit = calib::fit_sensing_params(pairs);
    if (std::abs(fit.p - 0.54) <= 0.03 && std::abs(fit.lambda - 0.117) <= 0.03) ++successes;
  }
  report(8, successes >= 18, "600-image calibration recovery: " + std::to_string(successes) +
                                 "/20 seeds within +-0.03 (need >= 18)");
}

void criterion_9() {
  std::mt19937_64 rng(909090);
  std::uniform_real_distribution<double> Ulon(-74.00, -73.95);
  std::uniform_real_distribution<double> Ulat(40.73, 40.78);
  std::uniform_real_distribution<double> Ustep(-0.0008, 0.0008);
  std::uniform_int_distribution<int> Uverts(2, 5);
  std::uniform_int_distribution<long> Ucount(0, 12);
  std::uniform_int_distribution<long long> Usecs(0, 365LL * 86400 - 1);

  std::vector<agg::Segment> segments;
  for (int i = 0; i < 50; ++i) {
    agg::Segment s{i, {}};
    double lon = Ulon(rng), lat = Ulat(rng);
    s.points.emplace_back(lon, lat);
    for (int v = 1; v < Uverts(rng); ++v) {
      double dlon = Ustep(rng), dlat = Ustep(rng);
      if (dlon == 0 && dlat == 0) dlon = 1e-5;
      lon += dlon;
      lat += dlat;
      s.points.emplace_back(lon, lat);
    }
    segments.push_back(std::move(s));
  }
  const auto idx = agg::SegmentIndex::build(segments, 5.0);
  const auto& proj = idx.projection();
  const auto start = agg::parse_timestamp("2024-01-01T00:00:00Z");

  std::vector<agg::DetectionRecord> records;
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    agg::DetectionRecord rec{"r" + std::to_string(i), start + std::chrono::seconds{Usecs(rng)},
                             Ulon(rng), Ulat(rng), Ucount(rng)};
    const auto [qx, qy] = proj.to_xy(rec.lon, rec.lat);
    double best_d2 = std::numeric_limits<double>::infinity();
    std::int64_t best_seg = std::numeric_limits<std::int64_t>::max();
    for (const auto& pt : idx.samples()) {
      const double dx = qx - pt.x, dy = qy - pt.y;
      const double d2 = dx * dx + dy * dy;
      if (d2 < best_d2 || (d2 == best_d2 && pt.segment_id < best_seg)) {
        best_d2 = d2;
        best_seg = pt.segment_id;
      }
    }
    const auto hit = agg::assign(rec, idx);
    if (hit.segment_id != best_seg || std::abs(hit.distance_m - std::sqrt(best_d2)) > 1e-9)
      ++mismatches;
    records.push_back(std::move(rec));
  }

  const auto hist = agg::temporal_histograms(records);
  std::uint64_t hour_total = 0, day_total = 0;
  for (auto n : hist.by_hour) hour_total += n;
  for (auto n : hist.by_weekday) day_total += n;
  const bool hist_ok = hour_total == records.size() && day_total == records.size();

  report(9, mismatches == 0 && hist_ok,
         "nearest-segment oracle: " + std::to_string(1000 - mismatches) +
             "/1000 agree; histogram totals " + std::to_string(hour_total) + "/" +
             std::to_string(day_total) + " of 1000");
}

bool run_cli(const std::string& args) {
  const std::string cmd = std::string(DENSIM_CLI_PATH) + " " + args + " > /dev/null";
  return std::system(cmd.c_str()) == 0;
}

bool dirs_identical(const fs::path& a, const fs::path& b, std::string& why) {
  std::vector<std::string> names_a, names_b;
  for (const auto& e : fs::directory_iterator(a)) names_a.push_back(e.path().filename().string());
  for (const auto& e : fs::directory_iterator(b)) names_b.push_back(e.path().filename().string());
  std::sort(names_a.begin(), names_a.end());
  std::sort(names_b.begin(), names_b.end());
  if (names_a != names_b) {
    why = "different file sets";
    return false;
  }
  for (const auto& name : names_a) {
    std::ifstream fa(a / name, std::ios::binary), fb(b / name, std::ios::binary);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    if (sa.str() != sb.str()) {
      why = name + " differs";
      return false;
    }
  }
  return true;
}

void criterion_10() {
  const auto base = fs::temp_directory_path() / "densim_acceptance_determinism";
  fs::remove_all(base);
  fs::create_directories(base);
  const auto cfg_file = base / "config.json";
  experiment::SimConfig cfg;
  cfg.grid_rows = 12;
  cfg.grid_cols = 12;
  cfg.n_people = 30;
  cfg.n_sensors = 5;
  cfg.steps = 300;
  cfg.error_stride = 5;
  cfg.tail = 20;
  std::ofstream(cfg_file) << experiment::config_to_json(cfg).dump(2);

  const std::string common = "sweep --config " + cfg_file.string() +
                             " --p 0.5,1.0 --lambda 0.0,0.3 --runs 2 --seed-root 5";
  const bool ran = run_cli(common + " --jobs 1 --out " + (base / "serial").string()) &&
                   run_cli(common + " --jobs 4 --out " + (base / "parallel").string()) &&
                   run_cli(common + " --jobs 1 --out " + (base / "again").string());
  if (!ran) {
    report(10, false, "densim sweep invocation failed");
    return;
  }
  std::string why;
  const bool same_parallel = dirs_identical(base / "serial", base / "parallel", why);
  std::string detail = same_parallel ? "jobs=1 and jobs=4 outputs byte-identical" : "jobs=1 vs jobs=4: " + why;
  const bool same_repeat = dirs_identical(base / "serial", base / "again", why);
  detail += same_repeat ? "; repeat invocation byte-identical" : "; repeat differs: " + why;
  report(10, same_parallel && same_repeat, detail);
  fs::remove_all(base);
}

void guarded(void (*f)(), int criterion) {
  try {
    f();
  } catch (const std::exception& e) {
    report(criterion, false, std::string("exception: ") + e.what());
  }
}

}  // namespace

int main() {
  guarded(criterion_1, 1);
  guarded(criterion_2, 2);
  guarded(criterion_3, 3);
  try {
    criteria_4_and_5();
  } catch (const std::exception& e) {
    report(4, false, std::string("exception: ") + e.what());
    report(5, false, "sweep unavailable");
  }
  guarded(criterion_6, 6);
  guarded(criterion_7, 7);
  guarded(criterion_8, 8);
  guarded(criterion_9, 9);
  guarded(criterion_10, 10);
  std::printf("%d criterion(s) failing\n", failures);
  return failures == 0 ? 0 : 1;
}
