#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace densim::calib {

struct BBox {
  double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  void validate() const;  // throws std::invalid_argument on degenerate boxes
};

struct Detection {
  BBox box;
  double score = 0;  // in [0,1]
};

// Indices refer to the unfiltered input lists.
struct MatchResult {
  std::vector<std::pair<std::size_t, std::size_t>> true_positives;  // (det, gt)
  std::vector<std::size_t> false_positives;                         // det indices
  std::vector<std::size_t> false_negatives;                         // gt indices
};

double iou(const BBox& a, const BBox& b);

// Greedy protocol: drop boxes under min_height (both sides) and detections
// under score_min; walk detections by descending score (ties: lower x_min,
// then y_min); each takes the unmatched ground truth with the highest
// IoU >= iou_min (ties: lowest index). Leftover detections are false
// positives, leftover ground truths false negatives.
MatchResult match_detections(const std::vector<Detection>& dets, const std::vector<BBox>& gts,
                             double iou_min = 0.5, double min_height = 0.0, double score_min = 0.0);

struct PrPoint {
  double threshold, precision, recall;
};

// Aggregated over images keyed identically in both maps; images present on one
// side only count as empty on the other. Zero-denominator convention: 1.0.
std::vector<PrPoint> pr_curve(const std::map<std::string, std::vector<Detection>>& dets_by_image,
                              const std::map<std::string, std::vector<BBox>>& gts_by_image,
                              const std::vector<double>& score_thresholds, double min_height,
                              double iou_min = 0.5);

struct SensingFit {
  double p = 0, lambda = 0;
  double stderr_p = 0, stderr_lambda = 0;
  std::size_t n_points = 0;
  double residual_dot = 0;  // sum of residual * true_count, ~0 for a valid fit
};

// Least-squares line measured = p * true_count + lambda.
// Throws std::invalid_argument with fewer than 2 distinct true counts.
SensingFit fit_sensing_params(const std::vector<std::pair<double, double>>& pairs);

struct CalibrationReport {
  double p, lambda, stderr_p, stderr_lambda;
  double h_hat;        // mean measured density
  double h_unbiased;   // (h_hat - lambda) / p
  double bound;        // lambda / (4 (h_hat - lambda)); 0 when uninformative
  bool bound_informative;
};

CalibrationReport calibration_report(const SensingFit& fit, double h_hat);

// CSV loaders, header required:
//   detections: image_id,x_min,y_min,x_max,y_max,score
//   ground truth: image_id,x_min,y_min,x_max,y_max
std::map<std::string, std::vector<Detection>> load_detections(const std::filesystem::path& file);
std::map<std::string, std::vector<BBox>> load_ground_truth(const std::filesystem::path& file);

}  // namespace densim::calib
