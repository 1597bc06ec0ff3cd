#include "densim/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "densim/parse.hpp"

namespace densim::calib {

void BBox::validate() const {
  if (!(x_max > x_min && y_max > y_min))
    throw std::invalid_argument("degenerate box: max edges must exceed min edges");
}

double iou(const BBox& a, const BBox& b) {
  a.validate();
  b.validate();
  const double ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (ix <= 0 || iy <= 0) return 0.0;
  const double inter = ix * iy;
  return inter / (a.area() + b.area() - inter);
}

MatchResult match_detections(const std::vector<Detection>& dets, const std::vector<BBox>& gts,
                             double iou_min, double min_height, double score_min) {
  if (!(iou_min >= 0 && iou_min <= 1)) throw std::invalid_argument("iou_min must be in [0,1]");
  std::vector<std::size_t> det_idx, gt_idx;
  for (std::size_t i = 0; i < dets.size(); ++i)
    if (dets[i].box.height() >= min_height && dets[i].score >= score_min) det_idx.push_back(i);
  for (std::size_t i = 0; i < gts.size(); ++i)
    if (gts[i].height() >= min_height) gt_idx.push_back(i);

  std::sort(det_idx.begin(), det_idx.end(), [&](std::size_t a, std::size_t b) {
    const Detection &da = dets[a], &db = dets[b];
    if (da.score != db.score) return da.score > db.score;
    if (da.box.x_min != db.box.x_min) return da.box.x_min < db.box.x_min;
    if (da.box.y_min != db.box.y_min) return da.box.y_min < db.box.y_min;
    return a < b;
  });

  MatchResult out;
  std::vector<char> taken(gts.size(), 0);
  for (std::size_t d : det_idx) {
    double best = -1;
    std::size_t best_gt = gts.size();
    for (std::size_t g : gt_idx) {
      if (taken[g]) continue;
      const double overlap = iou(dets[d].box, gts[g]);
      if (overlap >= iou_min && overlap > best) {
        best = overlap;
        best_gt = g;
      }
    }
    if (best_gt < gts.size()) {
      taken[best_gt] = 1;
      out.true_positives.emplace_back(d, best_gt);
    } else {
      out.false_positives.push_back(d);
    }
  }
  for (std::size_t g : gt_idx)
    if (!taken[g]) out.false_negatives.push_back(g);
  return out;
}

std::vector<PrPoint> pr_curve(const std::map<std::string, std::vector<Detection>>& dets_by_image,
                              const std::map<std::string, std::vector<BBox>>& gts_by_image,
                              const std::vector<double>& score_thresholds, double min_height,
                              double iou_min) {
  if (score_thresholds.empty()) throw std::invalid_argument("need at least one threshold");
  std::vector<std::string> images;
  for (const auto& [id, _] : dets_by_image) images.push_back(id);
  for (const auto& [id, _] : gts_by_image)
    if (!dets_by_image.count(id)) images.push_back(id);
  static const std::vector<Detection> no_dets;
  static const std::vector<BBox> no_gts;
  std::vector<PrPoint> curve;
  for (double thr : score_thresholds) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& id : images) {
      auto dit = dets_by_image.find(id);
      auto git = gts_by_image.find(id);
      const auto m = match_detections(dit == dets_by_image.end() ? no_dets : dit->second,
                                      git == gts_by_image.end() ? no_gts : git->second, iou_min,
                                      min_height, thr);
      tp += m.true_positives.size();
      fp += m.false_positives.size();
      fn += m.false_negatives.size();
    }
    const double precision = (tp + fp) ? static_cast<double>(tp) / (tp + fp) : 1.0;
    const double recall = (tp + fn) ? static_cast<double>(tp) / (tp + fn) : 1.0;
    curve.push_back({thr, precision, recall});
  }
  return curve;
}

SensingFit fit_sensing_params(const std::vector<std::pair<double, double>>& pairs) {
  const std::size_t n = pairs.size();
  if (n < 2) throw std::invalid_argument("need at least 2 points");
  double sx = 0, sy = 0;
  for (const auto& [x, y] : pairs) {
    sx += x;
    sy += y;
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (const auto& [x, y] : pairs) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx == 0) throw std::invalid_argument("all true counts identical: slope is unidentifiable");
  SensingFit fit;
  fit.n_points = n;
  fit.p = sxy / sxx;
  fit.lambda = my - fit.p * mx;
  double ssr = 0;
  for (const auto& [x, y] : pairs) {
    const double r = y - (fit.p * x + fit.lambda);
    ssr += r * r;
    fit.residual_dot += r * x;
  }
  if (n > 2) {
    const double s2 = ssr / static_cast<double>(n - 2);
    fit.stderr_p = std::sqrt(s2 / sxx);
    fit.stderr_lambda = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
  }
  return fit;
}

CalibrationReport calibration_report(const SensingFit& fit, double h_hat) {
  CalibrationReport rep{fit.p, fit.lambda, fit.stderr_p, fit.stderr_lambda, h_hat, 0, 0, false};
  if (fit.p > 0) rep.h_unbiased = (h_hat - fit.lambda) / fit.p;
  rep.bound_informative = fit.lambda >= 0 && h_hat > fit.lambda && fit.p > 0;
  if (rep.bound_informative && fit.lambda > 0)
    rep.bound = fit.lambda / (4.0 * (h_hat - fit.lambda));
  return rep;
}

namespace {

std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& file,
                                                const std::string& header, std::string& where) {
  std::ifstream in(file);
  if (!in) throw io::ParseError("cannot open " + file.string());
  where = file.filename().string();
  std::string line;
  if (!std::getline(in, line) || std::string(io::trim(line)) != header)
    throw io::ParseError(where + ": first line must be '" + header + "'");
  std::vector<std::vector<std::string>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (io::trim(line).empty()) continue;
    auto fields = io::split(line, ',');
    fields.push_back(std::to_string(lineno));  // carry the line number for errors
    rows.push_back(std::move(fields));
  }
  return rows;
}

BBox parse_box(const std::vector<std::string>& f, std::size_t offset, const std::string& where,
               std::size_t lineno) {
  BBox b{io::to_double(f[offset], where, lineno, "x_min"),
         io::to_double(f[offset + 1], where, lineno, "y_min"),
         io::to_double(f[offset + 2], where, lineno, "x_max"),
         io::to_double(f[offset + 3], where, lineno, "y_max")};
  try {
    b.validate();
  } catch (const std::invalid_argument& e) {
    io::fail_at(where, lineno, e.what());
  }
  return b;
}

}  // namespace

std::map<std::string, std::vector<Detection>> load_detections(const std::filesystem::path& file) {
  std::string where;
  auto rows = read_rows(file, "image_id,x_min,y_min,x_max,y_max,score", where);
  std::map<std::string, std::vector<Detection>> out;
  for (const auto& f : rows) {
    const std::size_t lineno = std::stoull(f.back());
    if (f.size() != 7) io::fail_at(where, lineno, "expected 6 columns");
    const double score = io::to_double(f[5], where, lineno, "score");
    if (!(score >= 0 && score <= 1)) io::fail_at(where, lineno, "score outside [0,1]");
    out[f[0]].push_back({parse_box(f, 1, where, lineno), score});
  }
  return out;
}

std::map<std::string, std::vector<BBox>> load_ground_truth(const std::filesystem::path& file) {
  std::string where;
  auto rows = read_rows(file, "image_id,x_min,y_min,x_max,y_max", where);
  std::map<std::string, std::vector<BBox>> out;
  for (const auto& f : rows) {
    const std::size_t lineno = std::stoull(f.back());
    if (f.size() != 6) io::fail_at(where, lineno, "expected 5 columns");
    out[f[0]].push_back(parse_box(f, 1, where, lineno));
  }
  return out;
}

}  // namespace densim::calib
