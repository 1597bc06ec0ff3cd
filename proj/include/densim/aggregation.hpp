#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace densim::agg {

struct DetectionRecord {
  std::string record_id;
  std::chrono::sys_seconds timestamp;  // UTC
  double lon = 0, lat = 0;
  long count = 0;
};

struct Segment {
  std::int64_t segment_id = 0;
  std::vector<std::pair<double, double>> points;  // (lon, lat), >= 2, consecutive distinct
};

// "YYYY-MM-DDTHH:MM:SS" with optional fractional seconds (ignored) and
// optional trailing 'Z'. Throws std::invalid_argument on anything else.
std::chrono::sys_seconds parse_timestamp(const std::string& iso);
std::string format_timestamp(std::chrono::sys_seconds t);

struct RecordLoad {
  std::vector<DetectionRecord> records;
  std::vector<std::string> rejected;  // one message per bad row (lenient mode)
};

// CSV with header record_id,timestamp_iso8601,lon,lat,count.
// strict: first bad row throws; lenient: bad rows are collected and skipped.
RecordLoad load_records(const std::filesystem::path& file, bool strict = true);
void save_records(const std::vector<DetectionRecord>& records, const std::filesystem::path& file);

// GeoJSON FeatureCollection of LineStrings with a segment_id property, or CSV
// rows segment_id,lon1,lat1,lon2,lat2,... (extension decides the parser).
std::vector<Segment> load_segments(const std::filesystem::path& file);

// Equirectangular plane about a fixed origin; adequate at city scale.
struct PlanarProjection {
  double lon0 = 0, lat0 = 0;
  double meters_per_deg_lon = 0, meters_per_deg_lat = 0;

  std::pair<double, double> to_xy(double lon, double lat) const {
    return {(lon - lon0) * meters_per_deg_lon, (lat - lat0) * meters_per_deg_lat};
  }
};

struct SamplePoint {
  double x = 0, y = 0;
  std::int64_t segment_id = 0;
};

// Polylines densified to points at most `spacing` meters apart (endpoints
// kept), projected about the vertex centroid, indexed in a KD-tree.
class SegmentIndex {
 public:
  static SegmentIndex build(const std::vector<Segment>& segments, double spacing_m);

  struct Hit {
    std::int64_t segment_id;
    double distance_m;
  };
  // Nearest sample point; equal distances resolve to the smallest segment_id.
  Hit nearest(double lon, double lat) const;

  const PlanarProjection& projection() const { return proj_; }
  const std::vector<SamplePoint>& samples() const { return points_; }

 private:
  struct KdNode {
    std::int32_t left = -1, right = -1;
    std::int32_t point = -1;
    std::int8_t axis = 0;
  };
  std::int32_t build_node(std::int32_t lo, std::int32_t hi, int depth);
  void search(std::int32_t node, double qx, double qy, double& best_d2,
              std::int64_t& best_seg) const;

  PlanarProjection proj_;
  std::vector<SamplePoint> points_;
  std::vector<KdNode> nodes_;
  std::int32_t root_ = -1;
};

inline SegmentIndex::Hit assign(const DetectionRecord& rec, const SegmentIndex& idx) {
  return idx.nearest(rec.lon, rec.lat);
}

struct SegmentStats {
  std::int64_t segment_id = 0;
  std::uint64_t n_records = 0;
  double mean_count = 0;
  double sum_count = 0;
};

struct AggregateResult {
  std::vector<SegmentStats> stats;  // sorted by segment_id, only segments with records
  std::uint64_t n_dropped = 0;      // records farther than max_distance from every segment
};

AggregateResult aggregate(const std::vector<DetectionRecord>& records, const SegmentIndex& idx,
                          double max_distance_m);

struct Histograms {
  std::array<std::uint64_t, 24> by_hour{};
  std::array<std::uint64_t, 7> by_weekday{};  // Monday = 0
};

// Buckets by hour of day and day of week after shifting timestamps by
// offset_minutes (0 keeps plain UTC).
Histograms temporal_histograms(const std::vector<DetectionRecord>& records,
                               long offset_minutes = 0);

// GeoJSON FeatureCollection mirroring `stats`, geometry looked up by id in
// `segments`; properties segment_id, n_records, mean_count.
void export_heatmap(const std::vector<SegmentStats>& stats, const std::vector<Segment>& segments,
                    const std::filesystem::path& file);
// Flat rows: segment_id,n_records,mean_count,sum_count
void export_heatmap_csv(const std::vector<SegmentStats>& stats,
                        const std::filesystem::path& file);
std::vector<SegmentStats> load_heatmap(const std::filesystem::path& file);

}  // namespace densim::agg
