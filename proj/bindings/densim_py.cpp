#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "densim/aggregation.hpp"
#include "densim/calibration.hpp"
#include "densim/experiment.hpp"
#include "densim/mobility.hpp"
#include "densim/rng.hpp"
#include "densim/sensing.hpp"
#include "densim/theory.hpp"
#include "densim/world_graph.hpp"

namespace py = pybind11;

namespace {

std::span<const double> as_span(const std::vector<double>& v) {
  return {v.data(), v.size()};
}

std::span<const densim::Agent> as_span(const std::vector<densim::Agent>& v) {
  return {v.data(), v.size()};
}

std::int64_t to_epoch(std::chrono::sys_seconds t) { return t.time_since_epoch().count(); }

std::chrono::sys_seconds from_epoch(std::int64_t s) {
  return std::chrono::sys_seconds{std::chrono::seconds{s}};
}

void bind_world(py::module_& m) {
  py::class_<densim::GridMask>(m, "GridMask")
      .def(py::init([](int rows, int cols, const std::vector<bool>& blocked) {
             if (rows <= 0 || cols <= 0) throw std::invalid_argument("mask dimensions must be positive");
             if (blocked.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
               throw std::invalid_argument("blocked list must hold rows*cols entries");
             densim::GridMask mask{rows, cols, {}};
             mask.blocked.assign(blocked.begin(), blocked.end());
             return mask;
           }),
           py::arg("rows"), py::arg("cols"), py::arg("blocked"))
      .def_readonly("rows", &densim::GridMask::rows)
      .def_readonly("cols", &densim::GridMask::cols)
      .def("at", &densim::GridMask::at, py::arg("r"), py::arg("c"));

  py::class_<densim::WorldGraph>(m, "WorldGraph")
      .def_static("from_parts", &densim::WorldGraph::from_parts,
                  py::arg("xs"), py::arg("ys"), py::arg("edges"))
      .def("node_count", &densim::WorldGraph::node_count)
      .def("edge_count", &densim::WorldGraph::edge_count)
      .def("x", &densim::WorldGraph::x, py::arg("v"))
      .def("y", &densim::WorldGraph::y, py::arg("v"))
      .def("neighbors",
           [](const densim::WorldGraph& g, densim::NodeId v) {
             std::vector<std::pair<densim::NodeId, double>> out;
             for (const auto& e : g.neighbors(v)) out.emplace_back(e.to, e.weight);
             return out;
           },
           py::arg("v"))
      .def("has_edge", &densim::WorldGraph::has_edge, py::arg("a"), py::arg("b"))
      .def_property_readonly("bounds",
                             [](const densim::WorldGraph& g) {
                               auto b = g.bounds();
                               return py::make_tuple(b.min_x, b.min_y, b.max_x, b.max_y);
                             })
      .def("component_count", &densim::WorldGraph::component_count)
      .def("component_of", &densim::WorldGraph::component_of, py::arg("v"))
      .def("component_members", &densim::WorldGraph::component_members, py::arg("comp"))
      .def("is_grid", &densim::WorldGraph::is_grid)
      .def("grid_rows", &densim::WorldGraph::grid_rows)
      .def("grid_cols", &densim::WorldGraph::grid_cols)
      .def("node_at", &densim::WorldGraph::node_at, py::arg("r"), py::arg("c"));

  m.def("build_grid_world",
        [](int rows, int cols, const std::optional<densim::GridMask>& obstacles) {
          return obstacles ? densim::build_grid_world(rows, cols, *obstacles)
                           : densim::build_grid_world(rows, cols);
        },
        py::arg("rows"), py::arg("cols"), py::arg("obstacles") = py::none());
  m.def("astar_path", &densim::astar_path, py::arg("g"), py::arg("src"), py::arg("dst"));
  m.def("path_cost", &densim::path_cost, py::arg("g"), py::arg("path"));
  m.def("load_graph", &densim::load_graph, py::arg("file"));
  m.def("save_graph", &densim::save_graph, py::arg("g"), py::arg("file"));
  m.def("load_grid_mask", &densim::load_grid_mask, py::arg("file"));
}

void bind_rng(py::module_& m) {
  py::class_<densim::Rng>(m, "Rng")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("__call__", [](densim::Rng& r) { return r(); });
  m.def("mix64", [](std::uint64_t z) { return densim::mix64(z); }, py::arg("z"));
  m.def("derive_seed",
        [](std::uint64_t root, const std::vector<std::uint64_t>& path) {
          std::uint64_t h = densim::mix64(root);
          for (std::uint64_t v : path) h = densim::mix64(h ^ v);
          return h;
        },
        py::arg("root"), py::arg("path"));
}

void bind_mobility(py::module_& m) {
  py::enum_<densim::AgentKind>(m, "AgentKind")
      .value("person", densim::AgentKind::person)
      .value("sensor", densim::AgentKind::sensor);

  py::class_<densim::Agent>(m, "Agent")
      .def(py::init<>())
      .def_readwrite("kind", &densim::Agent::kind)
      .def_readwrite("position", &densim::Agent::position)
      .def_readwrite("speed", &densim::Agent::speed)
      .def_property_readonly("path",
                             [](const densim::Agent& a) {
                               return std::vector<densim::NodeId>(a.path.begin(), a.path.end());
                             });

  m.def("init_population", &densim::init_population,
        py::arg("g"), py::arg("n_people"), py::arg("n_sensors"),
        py::arg("v_person"), py::arg("v_sensor"), py::arg("rng"));
  m.def("step_agent", &densim::step_agent, py::arg("agent"), py::arg("g"), py::arg("rng"));
}

void bind_sensing(py::module_& m) {
  py::class_<densim::SensingParams>(m, "SensingParams")
      .def(py::init([](double p, double lambda, double radius) {
             return densim::SensingParams{p, lambda, radius};
           }),
           py::arg("p") = 1.0, py::arg("lambda_") = 0.0, py::arg("radius") = 1.0)
      .def_readwrite("p", &densim::SensingParams::p)
      .def_readwrite("lambda_", &densim::SensingParams::lambda)
      .def_readwrite("radius", &densim::SensingParams::radius)
      .def("validate", &densim::SensingParams::validate);

  m.def("sense", &densim::sense, py::arg("n_in_range"), py::arg("params"), py::arg("rng"));
  m.def("people_in_range",
        [](const densim::Agent& sensor, const std::vector<densim::Agent>& agents,
           const densim::WorldGraph& g, double radius) {
          return densim::people_in_range(sensor, as_span(agents), g, radius);
        },
        py::arg("sensor"), py::arg("agents"), py::arg("g"), py::arg("radius"));

  py::class_<densim::BucketMap>(m, "BucketMap")
      .def_static("identity", &densim::BucketMap::identity, py::arg("g"))
      .def_static("coarsened", &densim::BucketMap::coarsened, py::arg("g"), py::arg("factor"))
      .def("size", &densim::BucketMap::size)
      .def("bucket_of", &densim::BucketMap::bucket_of, py::arg("v"))
      .def("x", &densim::BucketMap::x, py::arg("bucket"))
      .def("y", &densim::BucketMap::y, py::arg("bucket"));

  auto field = py::class_<densim::DensityField>(m, "DensityField")
      .def(py::init<densim::BucketMap>(), py::arg("buckets"))
      .def("buckets", [](const densim::DensityField& f) { return f.buckets(); })
      .def("record_step",
           [](densim::DensityField& f, const densim::WorldGraph& g,
              const std::vector<densim::Agent>& agents, const densim::SensingParams& params,
              densim::Rng& rng) { f.record_step(g, as_span(agents), params, rng); },
           py::arg("g"), py::arg("agents"), py::arg("params"), py::arg("rng"))
      .def("truth_steps", &densim::DensityField::truth_steps)
      .def("samples", &densim::DensityField::samples, py::arg("bucket"))
      .def("snapshot", &densim::DensityField::snapshot);

  py::class_<densim::DensityField::Snapshot>(field, "Snapshot")
      .def_readonly("psi", &densim::DensityField::Snapshot::psi)
      .def_readonly("phi", &densim::DensityField::Snapshot::phi);

  m.def("write_snapshot_csv", &densim::write_snapshot_csv, py::arg("field"), py::arg("file"));
}

void bind_theory(py::module_& m) {
  auto t = m.def_submodule("theory", "asymptotic error metric, closed form and bounds");
  t.def("project",
        [](const std::vector<double>& psi, const std::vector<double>& phi) {
          return densim::theory::project(as_span(psi), as_span(phi));
        },
        py::arg("psi"), py::arg("phi"));
  t.def("normalized_error",
        [](const std::vector<double>& psi, const std::vector<double>& phi) {
          return densim::theory::normalized_error(as_span(psi), as_span(phi));
        },
        py::arg("psi"), py::arg("phi"));
  t.def("closed_form_error", &densim::theory::closed_form_error,
        py::arg("p"), py::arg("s"), py::arg("c"));
  t.def("bound_tight", &densim::theory::bound_tight,
        py::arg("p"), py::arg("lambda_"), py::arg("h"), py::arg("c"));
  t.def("bound_loose", &densim::theory::bound_loose,
        py::arg("p"), py::arg("lambda_"), py::arg("h"));
  t.def("bound_from_sampled_density", &densim::theory::bound_from_sampled_density,
        py::arg("lambda_"), py::arg("h_hat"));
  t.def("shape_c",
        [](const std::vector<double>& phi) { return densim::theory::shape_c(as_span(phi)); },
        py::arg("phi"));
  t.def("mean_density",
        [](const std::vector<double>& phi) { return densim::theory::mean_density(as_span(phi)); },
        py::arg("phi"));
  t.def("unbiased_h", &densim::theory::unbiased_h,
        py::arg("h_hat"), py::arg("p"), py::arg("lambda_"));
}

void bind_experiment(py::module_& m) {
  auto e = m.def_submodule("experiment", "simulation runs, sweeps and theory comparison");
  using densim::experiment::DecayPoint;
  using densim::experiment::RunResult;
  using densim::experiment::SimConfig;
  using densim::experiment::SweepCell;
  using densim::experiment::SweepTable;

  py::class_<SimConfig>(e, "SimConfig")
      .def(py::init<>())
      .def_readwrite("grid_rows", &SimConfig::grid_rows)
      .def_readwrite("grid_cols", &SimConfig::grid_cols)
      .def_readwrite("grid_file", &SimConfig::grid_file)
      .def_readwrite("graph_file", &SimConfig::graph_file)
      .def_readwrite("n_people", &SimConfig::n_people)
      .def_readwrite("n_sensors", &SimConfig::n_sensors)
      .def_readwrite("v_person", &SimConfig::v_person)
      .def_readwrite("v_sensor", &SimConfig::v_sensor)
      .def_readwrite("radius", &SimConfig::radius)
      .def_readwrite("p", &SimConfig::p)
      .def_readwrite("lambda_", &SimConfig::lambda)
      .def_readwrite("steps", &SimConfig::steps)
      .def_readwrite("bucket_coarsen", &SimConfig::bucket_coarsen)
      .def_readwrite("error_stride", &SimConfig::error_stride)
      .def_readwrite("tail", &SimConfig::tail)
      .def_readwrite("seed", &SimConfig::seed)
      .def("validate", &SimConfig::validate);

  e.def("config_from_json",
        [](const std::string& text) {
          return densim::experiment::config_from_json(nlohmann::json::parse(text));
        },
        py::arg("text"));
  e.def("config_to_json",
        [](const SimConfig& cfg) { return densim::experiment::config_to_json(cfg).dump(2); },
        py::arg("cfg"));
  e.def("load_config", &densim::experiment::load_config, py::arg("file"));

  py::class_<DecayPoint>(e, "DecayPoint")
      .def_readonly("step", &DecayPoint::step)
      .def_readonly("cumulative_samples", &DecayPoint::cumulative_samples)
      .def_readonly("error", &DecayPoint::error);

  py::class_<RunResult>(e, "RunResult")
      .def_readonly("series", &RunResult::series)
      .def_readonly("psi", &RunResult::psi)
      .def_readonly("phi", &RunResult::phi)
      .def_readonly("bucket_x", &RunResult::bucket_x)
      .def_readonly("bucket_y", &RunResult::bucket_y)
      .def_readonly("samples", &RunResult::samples);

  e.def("run_simulation", &densim::experiment::run_simulation, py::arg("cfg"),
        py::call_guard<py::gil_scoped_release>());
  e.def("asymptotic_error", &densim::experiment::asymptotic_error,
        py::arg("series"), py::arg("tail") = 200);

  py::class_<SweepCell>(e, "SweepCell")
      .def_readonly("p_index", &SweepCell::p_index)
      .def_readonly("lambda_index", &SweepCell::lambda_index)
      .def_readonly("p", &SweepCell::p)
      .def_readonly("lambda_", &SweepCell::lambda)
      .def_readonly("n_runs", &SweepCell::n_runs)
      .def_readonly("mean_asymptotic", &SweepCell::mean_asymptotic)
      .def_readonly("std_asymptotic", &SweepCell::std_asymptotic)
      .def_readonly("run_asymptotics", &SweepCell::run_asymptotics)
      .def_readonly("runs", &SweepCell::runs)
      .def_readonly("mean_curve", &SweepCell::mean_curve)
      .def_readonly("error", &SweepCell::error);

  py::class_<SweepTable>(e, "SweepTable")
      .def_readonly("p_values", &SweepTable::p_values)
      .def_readonly("lambda_values", &SweepTable::lambda_values)
      .def_readonly("runs_per_cell", &SweepTable::runs_per_cell)
      .def_readonly("seed_root", &SweepTable::seed_root)
      .def_readonly("base", &SweepTable::base)
      .def_readonly("cells", &SweepTable::cells)
      .def_readonly("phi", &SweepTable::phi)
      .def("cell",
           [](const SweepTable& t, int p_index, int lambda_index) {
             return t.cell(p_index, lambda_index);
           },
           py::arg("p_index"), py::arg("lambda_index"));

  e.def("sweep", &densim::experiment::sweep,
        py::arg("base"), py::arg("p_values"), py::arg("lambda_values"),
        py::arg("runs_per_cell"), py::arg("seed_root"), py::arg("jobs") = 1,
        py::call_guard<py::gil_scoped_release>());
  e.def("compare_to_theory",
        [](const SweepTable& table, const std::optional<std::vector<double>>& phi) {
          const std::vector<double>& ref = phi ? *phi : table.phi;
          return densim::experiment::compare_to_theory(table, as_span(ref)).dump(2);
        },
        py::arg("table"), py::arg("phi") = py::none());
  e.def("write_sweep_outputs", &densim::experiment::write_sweep_outputs,
        py::arg("table"), py::arg("out_dir"));
  e.def("write_run_outputs", &densim::experiment::write_run_outputs,
        py::arg("cfg"), py::arg("run"), py::arg("out_dir"));
}

void bind_calibration(py::module_& m) {
  auto c = m.def_submodule("calib", "detector matching and sensing parameter fits");
  using densim::calib::BBox;
  using densim::calib::CalibrationReport;
  using densim::calib::Detection;
  using densim::calib::MatchResult;
  using densim::calib::PrPoint;
  using densim::calib::SensingFit;

  py::class_<BBox>(c, "BBox")
      .def(py::init([](double x_min, double y_min, double x_max, double y_max) {
             return BBox{x_min, y_min, x_max, y_max};
           }),
           py::arg("x_min"), py::arg("y_min"), py::arg("x_max"), py::arg("y_max"))
      .def_readwrite("x_min", &BBox::x_min)
      .def_readwrite("y_min", &BBox::y_min)
      .def_readwrite("x_max", &BBox::x_max)
      .def_readwrite("y_max", &BBox::y_max)
      .def("width", &BBox::width)
      .def("height", &BBox::height)
      .def("area", &BBox::area)
      .def("validate", &BBox::validate);

  py::class_<Detection>(c, "Detection")
      .def(py::init([](const BBox& box, double score) { return Detection{box, score}; }),
           py::arg("box"), py::arg("score"))
      .def_readwrite("box", &Detection::box)
      .def_readwrite("score", &Detection::score);

  c.def("iou", &densim::calib::iou, py::arg("a"), py::arg("b"));

  py::class_<MatchResult>(c, "MatchResult")
      .def_readonly("true_positives", &MatchResult::true_positives)
      .def_readonly("false_positives", &MatchResult::false_positives)
      .def_readonly("false_negatives", &MatchResult::false_negatives);

  c.def("match_detections", &densim::calib::match_detections,
        py::arg("dets"), py::arg("gts"), py::arg("iou_min") = 0.5,
        py::arg("min_height") = 0.0, py::arg("score_min") = 0.0);

  py::class_<PrPoint>(c, "PrPoint")
      .def_readonly("threshold", &PrPoint::threshold)
      .def_readonly("precision", &PrPoint::precision)
      .def_readonly("recall", &PrPoint::recall);

  c.def("pr_curve", &densim::calib::pr_curve,
        py::arg("dets_by_image"), py::arg("gts_by_image"), py::arg("score_thresholds"),
        py::arg("min_height"), py::arg("iou_min") = 0.5);

  py::class_<SensingFit>(c, "SensingFit")
      .def_readonly("p", &SensingFit::p)
      .def_readonly("lambda_", &SensingFit::lambda)
      .def_readonly("stderr_p", &SensingFit::stderr_p)
      .def_readonly("stderr_lambda", &SensingFit::stderr_lambda)
      .def_readonly("n_points", &SensingFit::n_points)
      .def_readonly("residual_dot", &SensingFit::residual_dot);

  c.def("fit_sensing_params", &densim::calib::fit_sensing_params, py::arg("pairs"));

  py::class_<CalibrationReport>(c, "CalibrationReport")
      .def_readonly("p", &CalibrationReport::p)
      .def_readonly("lambda_", &CalibrationReport::lambda)
      .def_readonly("stderr_p", &CalibrationReport::stderr_p)
      .def_readonly("stderr_lambda", &CalibrationReport::stderr_lambda)
      .def_readonly("h_hat", &CalibrationReport::h_hat)
      .def_readonly("h_unbiased", &CalibrationReport::h_unbiased)
      .def_readonly("bound", &CalibrationReport::bound)
      .def_readonly("bound_informative", &CalibrationReport::bound_informative);

  c.def("calibration_report", &densim::calib::calibration_report,
        py::arg("fit"), py::arg("h_hat"));
  c.def("load_detections", &densim::calib::load_detections, py::arg("file"));
  c.def("load_ground_truth", &densim::calib::load_ground_truth, py::arg("file"));
}

void bind_aggregation(py::module_& m) {
  auto a = m.def_submodule("agg", "field record aggregation onto street segments");
  using densim::agg::AggregateResult;
  using densim::agg::DetectionRecord;
  using densim::agg::Histograms;
  using densim::agg::RecordLoad;
  using densim::agg::Segment;
  using densim::agg::SegmentIndex;
  using densim::agg::SegmentStats;

  py::class_<DetectionRecord>(a, "DetectionRecord")
      .def(py::init<>())
      .def(py::init([](std::string record_id, std::int64_t timestamp, double lon, double lat,
                       long count) {
             DetectionRecord rec;
             rec.record_id = std::move(record_id);
             rec.timestamp = from_epoch(timestamp);
             rec.lon = lon;
             rec.lat = lat;
             rec.count = count;
             return rec;
           }),
           py::arg("record_id"), py::arg("timestamp"), py::arg("lon"), py::arg("lat"),
           py::arg("count"))
      .def_readwrite("record_id", &DetectionRecord::record_id)
      .def_property("timestamp",
                    [](const DetectionRecord& r) { return to_epoch(r.timestamp); },
                    [](DetectionRecord& r, std::int64_t s) { r.timestamp = from_epoch(s); })
      .def_readwrite("lon", &DetectionRecord::lon)
      .def_readwrite("lat", &DetectionRecord::lat)
      .def_readwrite("count", &DetectionRecord::count);

  py::class_<Segment>(a, "Segment")
      .def(py::init([](std::int64_t segment_id, std::vector<std::pair<double, double>> points) {
             return Segment{segment_id, std::move(points)};
           }),
           py::arg("segment_id"), py::arg("points"))
      .def_readwrite("segment_id", &Segment::segment_id)
      .def_readwrite("points", &Segment::points);

  a.def("parse_timestamp",
        [](const std::string& iso) { return to_epoch(densim::agg::parse_timestamp(iso)); },
        py::arg("iso"));
  a.def("format_timestamp",
        [](std::int64_t s) { return densim::agg::format_timestamp(from_epoch(s)); },
        py::arg("timestamp"));

  py::class_<RecordLoad>(a, "RecordLoad")
      .def_readonly("records", &RecordLoad::records)
      .def_readonly("rejected", &RecordLoad::rejected);

  a.def("load_records", &densim::agg::load_records, py::arg("file"), py::arg("strict") = true);
  a.def("save_records", &densim::agg::save_records, py::arg("records"), py::arg("file"));
  a.def("load_segments", &densim::agg::load_segments, py::arg("file"));

  auto idx = py::class_<SegmentIndex>(a, "SegmentIndex")
      .def_static("build", &SegmentIndex::build, py::arg("segments"), py::arg("spacing_m"))
      .def("nearest", &SegmentIndex::nearest, py::arg("lon"), py::arg("lat"))
      .def("sample_count",
           [](const SegmentIndex& s) { return s.samples().size(); });

  py::class_<SegmentIndex::Hit>(idx, "Hit")
      .def_readonly("segment_id", &SegmentIndex::Hit::segment_id)
      .def_readonly("distance_m", &SegmentIndex::Hit::distance_m);

  py::class_<SegmentStats>(a, "SegmentStats")
      .def_readonly("segment_id", &SegmentStats::segment_id)
      .def_readonly("n_records", &SegmentStats::n_records)
      .def_readonly("mean_count", &SegmentStats::mean_count)
      .def_readonly("sum_count", &SegmentStats::sum_count);

  py::class_<AggregateResult>(a, "AggregateResult")
      .def_readonly("stats", &AggregateResult::stats)
      .def_readonly("n_dropped", &AggregateResult::n_dropped);

  a.def("aggregate", &densim::agg::aggregate,
        py::arg("records"), py::arg("idx"), py::arg("max_distance_m"));

  py::class_<Histograms>(a, "Histograms")
      .def_readonly("by_hour", &Histograms::by_hour)
      .def_readonly("by_weekday", &Histograms::by_weekday);

  a.def("temporal_histograms", &densim::agg::temporal_histograms,
        py::arg("records"), py::arg("offset_minutes") = 0);
  a.def("export_heatmap", &densim::agg::export_heatmap,
        py::arg("stats"), py::arg("segments"), py::arg("file"));
  a.def("export_heatmap_csv", &densim::agg::export_heatmap_csv,
        py::arg("stats"), py::arg("file"));
  a.def("load_heatmap", &densim::agg::load_heatmap, py::arg("file"));
}

}  // namespace

PYBIND11_MODULE(_densim, m) {
  m.doc() = "density estimation simulator";
  bind_world(m);
  bind_rng(m);
  bind_mobility(m);
  bind_sensing(m);
  bind_theory(m);
  bind_experiment(m);
  bind_calibration(m);
  bind_aggregation(m);
}
