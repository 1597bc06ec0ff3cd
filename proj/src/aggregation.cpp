#include "densim/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "densim/format.hpp"
#include "densim/parse.hpp"

namespace densim::agg {

namespace {

constexpr double kEarthRadiusM = 6371000.0;
constexpr double kMetersPerDegree = kEarthRadiusM * std::numbers::pi / 180.0;

void check_coords(double lon, double lat) {
  if (!(lat >= -90.0 && lat <= 90.0)) throw std::invalid_argument("lat outside [-90,90]");
  if (!(lon >= -180.0 && lon <= 180.0)) throw std::invalid_argument("lon outside [-180,180]");
}

int two_digits(const std::string& s, std::size_t pos) {
  if (pos + 1 >= s.size() || s[pos] < '0' || s[pos] > '9' || s[pos + 1] < '0' || s[pos + 1] > '9')
    throw std::invalid_argument("bad timestamp '" + s + "'");
  return (s[pos] - '0') * 10 + (s[pos + 1] - '0');
}

}  // namespace

std::chrono::sys_seconds parse_timestamp(const std::string& iso) {
  using namespace std::chrono;
  // YYYY-MM-DDTHH:MM:SS[.frac][Z]
  if (iso.size() < 19 || iso[4] != '-' || iso[7] != '-' || (iso[10] != 'T' && iso[10] != ' ') ||
      iso[13] != ':' || iso[16] != ':')
    throw std::invalid_argument("bad timestamp '" + iso + "'");
  for (int i : {0, 1, 2, 3})
    if (iso[i] < '0' || iso[i] > '9') throw std::invalid_argument("bad timestamp '" + iso + "'");
  const int y = (iso[0] - '0') * 1000 + (iso[1] - '0') * 100 + (iso[2] - '0') * 10 + (iso[3] - '0');
  const int mo = two_digits(iso, 5);
  const int d = two_digits(iso, 8);
  const int h = two_digits(iso, 11);
  const int mi = two_digits(iso, 14);
  const int se = two_digits(iso, 17);
  std::size_t rest = 19;
  if (rest < iso.size() && iso[rest] == '.') {
    ++rest;
    const std::size_t frac_start = rest;
    while (rest < iso.size() && iso[rest] >= '0' && iso[rest] <= '9') ++rest;
    if (rest == frac_start) throw std::invalid_argument("bad timestamp '" + iso + "'");
  }
  if (rest < iso.size() && iso[rest] == 'Z') ++rest;
  if (rest != iso.size()) throw std::invalid_argument("bad timestamp '" + iso + "'");
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || se > 59)
    throw std::invalid_argument("bad timestamp '" + iso + "'");
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{se};
}

std::string format_timestamp(std::chrono::sys_seconds t) {
  using namespace std::chrono;
  const auto dp = floor<days>(t);
  const year_month_day ymd{dp};
  const hh_mm_ss tod{t - dp};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(tod.hours().count()), static_cast<long>(tod.minutes().count()),
                static_cast<long>(tod.seconds().count()));
  return buf;
}

RecordLoad load_records(const std::filesystem::path& file, bool strict) {
  std::ifstream in(file);
  if (!in) throw io::ParseError("cannot open " + file.string());
  const std::string where = file.filename().string();
  std::string line;
  if (!std::getline(in, line) ||
      std::string(io::trim(line)) != "record_id,timestamp_iso8601,lon,lat,count")
    throw io::ParseError(where + ": first line must be the record header");
  RecordLoad out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (io::trim(line).empty()) continue;
    try {
      auto f = io::split(line, ',');
      if (f.size() != 5) io::fail_at(where, lineno, "expected 5 columns");
      DetectionRecord rec;
      rec.record_id = f[0];
      rec.timestamp = parse_timestamp(f[1]);
      rec.lon = io::to_double(f[2], where, lineno, "lon");
      rec.lat = io::to_double(f[3], where, lineno, "lat");
      rec.count = io::to_int(f[4], where, lineno, "count");
      check_coords(rec.lon, rec.lat);
      if (rec.count < 0) throw std::invalid_argument("count must be >= 0");
      out.records.push_back(std::move(rec));
    } catch (const std::exception& e) {
      std::string msg = e.what();
      if (msg.find(where) == std::string::npos)
        msg = where + " line " + std::to_string(lineno) + ": " + msg;
      if (strict) throw io::ParseError(msg);
      out.rejected.push_back(msg);
    }
  }
  return out;
}

void save_records(const std::vector<DetectionRecord>& records,
                  const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "record_id,timestamp_iso8601,lon,lat,count\n";
  for (const auto& r : records)
    out << r.record_id << ',' << format_timestamp(r.timestamp) << ',' << io::fmt_g(r.lon, 17)
        << ',' << io::fmt_g(r.lat, 17) << ',' << r.count << '\n';
}

namespace {

void validate_segment(const Segment& s, const std::string& where) {
  const std::string label = where + ": segment " + std::to_string(s.segment_id);
  if (s.points.size() < 2) throw io::ParseError(label + " needs >= 2 points");
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    try {
      check_coords(s.points[i].first, s.points[i].second);
    } catch (const std::exception& e) {
      throw io::ParseError(label + ": " + e.what());
    }
    if (i > 0 && s.points[i] == s.points[i - 1])
      throw io::ParseError(label + " repeats a point");
  }
}

std::int64_t segment_id_from_json(const nlohmann::json& v, const std::string& where) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    try {
      std::size_t used = 0;
      const long long id = std::stoll(s, &used);
      if (used == s.size()) return id;
    } catch (...) {
    }
  }
  throw io::ParseError(where + ": segment_id must be an integer");
}

std::vector<Segment> load_segments_geojson(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw io::ParseError("cannot open " + file.string());
  const std::string where = file.filename().string();
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw io::ParseError(where + ": " + e.what());
  }
  if (doc.value("type", "") != "FeatureCollection" || !doc.contains("features"))
    throw io::ParseError(where + ": expected a FeatureCollection");
  std::vector<Segment> segments;
  for (const auto& feature : doc["features"]) {
    const auto& geom = feature.at("geometry");
    if (geom.value("type", "") != "LineString")
      throw io::ParseError(where + ": every feature must be a LineString");
    Segment s;
    s.segment_id = segment_id_from_json(feature.at("properties").at("segment_id"), where);
    for (const auto& coord : geom.at("coordinates")) {
      if (!coord.is_array() || coord.size() < 2)
        throw io::ParseError(where + ": bad coordinate pair");
      s.points.emplace_back(coord[0].get<double>(), coord[1].get<double>());
    }
    validate_segment(s, where);
    segments.push_back(std::move(s));
  }
  return segments;
}

std::vector<Segment> load_segments_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw io::ParseError("cannot open " + file.string());
  const std::string where = file.filename().string();
  std::vector<Segment> segments;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = io::trim(line);
    if (t.empty()) continue;
    if (lineno == 1 && t.substr(0, 10) == "segment_id") continue;  // optional header
    auto f = io::split(t, ',');
    if (f.size() < 5 || f.size() % 2 == 0)
      io::fail_at(where, lineno, "expected segment_id followed by lon,lat pairs");
    Segment s;
    s.segment_id = io::to_int(f[0], where, lineno, "segment_id");
    for (std::size_t i = 1; i + 1 < f.size(); i += 2)
      s.points.emplace_back(io::to_double(f[i], where, lineno, "lon"),
                            io::to_double(f[i + 1], where, lineno, "lat"));
    validate_segment(s, where);
    segments.push_back(std::move(s));
  }
  if (segments.empty()) throw io::ParseError(where + ": no segments");
  return segments;
}

}  // namespace

std::vector<Segment> load_segments(const std::filesystem::path& file) {
  const auto ext = file.extension().string();
  if (ext == ".geojson" || ext == ".json") return load_segments_geojson(file);
  return load_segments_csv(file);
}

SegmentIndex SegmentIndex::build(const std::vector<Segment>& segments, double spacing_m) {
  if (segments.empty()) throw std::invalid_argument("need at least one segment");
  if (!(spacing_m > 0)) throw std::invalid_argument("spacing must be > 0");
  SegmentIndex idx;
  double lon_sum = 0, lat_sum = 0;
  std::size_t n_vertices = 0;
  for (const auto& s : segments) {
    if (s.points.size() < 2) throw std::invalid_argument("segments need >= 2 points");
    for (const auto& [lon, lat] : s.points) {
      lon_sum += lon;
      lat_sum += lat;
      ++n_vertices;
    }
  }
  idx.proj_.lon0 = lon_sum / static_cast<double>(n_vertices);
  idx.proj_.lat0 = lat_sum / static_cast<double>(n_vertices);
  idx.proj_.meters_per_deg_lat = kMetersPerDegree;
  idx.proj_.meters_per_deg_lon =
      kMetersPerDegree * std::cos(idx.proj_.lat0 * std::numbers::pi / 180.0);

  for (const auto& s : segments) {
    for (std::size_t i = 0; i + 1 < s.points.size(); ++i) {
      const auto [ax, ay] = idx.proj_.to_xy(s.points[i].first, s.points[i].second);
      const auto [bx, by] = idx.proj_.to_xy(s.points[i + 1].first, s.points[i + 1].second);
      const double len = std::hypot(bx - ax, by - ay);
      const long pieces = std::max<long>(1, static_cast<long>(std::ceil(len / spacing_m - 1e-9)));
      // j = 0 duplicates the previous leg's endpoint except on the first leg.
      for (long j = (i == 0 ? 0 : 1); j <= pieces; ++j) {
        const double t = static_cast<double>(j) / static_cast<double>(pieces);
        idx.points_.push_back({ax + (bx - ax) * t, ay + (by - ay) * t, s.segment_id});
      }
    }
  }
  idx.nodes_.reserve(idx.points_.size());
  idx.root_ = idx.build_node(0, static_cast<std::int32_t>(idx.points_.size()), 0);
  return idx;
}

std::int32_t SegmentIndex::build_node(std::int32_t lo, std::int32_t hi, int depth) {
  if (lo >= hi) return -1;
  const int axis = depth % 2;
  const std::int32_t mid = lo + (hi - lo) / 2;
  std::nth_element(points_.begin() + lo, points_.begin() + mid, points_.begin() + hi,
                   [axis](const SamplePoint& a, const SamplePoint& b) {
                     return axis == 0 ? a.x < b.x : a.y < b.y;
                   });
  const std::int32_t id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({-1, -1, mid, static_cast<std::int8_t>(axis)});
  const std::int32_t left = build_node(lo, mid, depth + 1);
  const std::int32_t right = build_node(mid + 1, hi, depth + 1);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void SegmentIndex::search(std::int32_t node, double qx, double qy, double& best_d2,
                          std::int64_t& best_seg) const {
  if (node < 0) return;
  const KdNode& n = nodes_[node];
  const SamplePoint& pt = points_[n.point];
  const double dx = qx - pt.x, dy = qy - pt.y;
  const double d2 = dx * dx + dy * dy;
  if (d2 < best_d2 || (d2 == best_d2 && pt.segment_id < best_seg)) {
    best_d2 = d2;
    best_seg = pt.segment_id;
  }
  const double delta = n.axis == 0 ? qx - pt.x : qy - pt.y;
  const std::int32_t near = delta < 0 ? n.left : n.right;
  const std::int32_t far = delta < 0 ? n.right : n.left;
  search(near, qx, qy, best_d2, best_seg);
  // The far side can still hold an equal-distance point with a smaller id.
  if (delta * delta <= best_d2) search(far, qx, qy, best_d2, best_seg);
}

SegmentIndex::Hit SegmentIndex::nearest(double lon, double lat) const {
  if (points_.empty()) throw std::logic_error("empty index");
  const auto [qx, qy] = proj_.to_xy(lon, lat);
  double best_d2 = std::numeric_limits<double>::infinity();
  std::int64_t best_seg = std::numeric_limits<std::int64_t>::max();
  search(root_, qx, qy, best_d2, best_seg);
  return {best_seg, std::sqrt(best_d2)};
}

AggregateResult aggregate(const std::vector<DetectionRecord>& records, const SegmentIndex& idx,
                          double max_distance_m) {
  if (!(max_distance_m >= 0)) throw std::invalid_argument("max_distance must be >= 0");
  std::map<std::int64_t, SegmentStats> by_segment;
  AggregateResult out;
  for (const auto& rec : records) {
    const auto hit = idx.nearest(rec.lon, rec.lat);
    if (hit.distance_m > max_distance_m) {
      ++out.n_dropped;
      continue;
    }
    auto& s = by_segment[hit.segment_id];
    s.segment_id = hit.segment_id;
    s.n_records += 1;
    s.sum_count += static_cast<double>(rec.count);
  }
  out.stats.reserve(by_segment.size());
  for (auto& [_, s] : by_segment) {
    s.mean_count = s.sum_count / static_cast<double>(s.n_records);
    out.stats.push_back(s);
  }
  return out;
}

Histograms temporal_histograms(const std::vector<DetectionRecord>& records, long offset_minutes) {
  using namespace std::chrono;
  Histograms h;
  for (const auto& rec : records) {
    const sys_seconds shifted = rec.timestamp + minutes{offset_minutes};
    const auto dp = floor<days>(shifted);
    const auto hour = duration_cast<hours>(shifted - dp).count();
    h.by_hour[static_cast<std::size_t>(hour)] += 1;
    const weekday wd{dp};
    h.by_weekday[wd.iso_encoding() - 1] += 1;  // Monday = 0
  }
  return h;
}

void export_heatmap(const std::vector<SegmentStats>& stats, const std::vector<Segment>& segments,
                    const std::filesystem::path& file) {
  std::map<std::int64_t, const Segment*> by_id;
  for (const auto& s : segments) by_id[s.segment_id] = &s;
  nlohmann::json features = nlohmann::json::array();
  for (const auto& st : stats) {
    auto it = by_id.find(st.segment_id);
    if (it == by_id.end())
      throw std::invalid_argument("stats reference unknown segment " +
                                  std::to_string(st.segment_id));
    nlohmann::json coords = nlohmann::json::array();
    for (const auto& [lon, lat] : it->second->points) coords.push_back({lon, lat});
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "LineString"}, {"coordinates", coords}}},
                        {"properties",
                         {{"segment_id", st.segment_id},
                          {"n_records", st.n_records},
                          {"mean_count", st.mean_count}}}});
  }
  nlohmann::json doc{{"type", "FeatureCollection"}, {"features", features}};
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << doc.dump(2) << '\n';
}

void export_heatmap_csv(const std::vector<SegmentStats>& stats,
                        const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "segment_id,n_records,mean_count,sum_count\n";
  for (const auto& s : stats)
    out << s.segment_id << ',' << s.n_records << ',' << io::fmt_g(s.mean_count) << ','
        << io::fmt_g(s.sum_count) << '\n';
}

std::vector<SegmentStats> load_heatmap(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw io::ParseError("cannot open " + file.string());
  const std::string where = file.filename().string();
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw io::ParseError(where + ": " + e.what());
  }
  std::vector<SegmentStats> stats;
  for (const auto& feature : doc.at("features")) {
    const auto& props = feature.at("properties");
    SegmentStats s;
    s.segment_id = segment_id_from_json(props.at("segment_id"), where);
    s.n_records = props.at("n_records").get<std::uint64_t>();
    s.mean_count = props.at("mean_count").get<double>();
    s.sum_count = s.mean_count * static_cast<double>(s.n_records);
    stats.push_back(s);
  }
  return stats;
}

}  // namespace densim::agg
