#pragma once

// Detection matching, precision/recall, Average Precision and Average
// Viewpoint Precision.

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "poselab/geometry.hpp"

namespace poselab::metrics {

struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double area() const { return (x2 - x1) * (y2 - y1); }
  bool valid() const { return x1 < x2 && y1 < y2; }

  friend bool operator==(const Box&, const Box&) = default;
};

struct Detection {
  int image_id = 0;
  int class_id = 1;
  double score = 0.0;
  Box box;
  double azimuth = 0.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct GroundTruth {
  int image_id = 0;
  int class_id = 1;
  Box box;
  double azimuth = 0.0;
  bool difficult = false;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

/// Continuous-coordinate intersection over union.
double iou(const Box& a, const Box& b);

enum class MatchLabel { TruePositive, FalsePositive, Ignored };

struct Match {
  std::size_t detection = 0;                // index into the input detections
  MatchLabel label = MatchLabel::FalsePositive;
  std::optional<std::size_t> ground_truth;  // index into the input ground truth
};

/// Ranks detections by descending score (ties: lower input index first) and
/// greedily assigns each to the not-yet-claimed ground truth of the same image
/// with the highest IoU >= threshold (IoU ties: lower index). A detection with
/// no candidate is a false positive; one assigned to a difficult instance is
/// Ignored and does not claim it. Returns matches in rank order.
/// All inputs are assumed to be of one class.
std::vector<Match> match_detections(std::span<const Detection> dets,
                                    std::span<const GroundTruth> gts, double iou_threshold = 0.5);

std::vector<std::size_t> rank_by_score(std::span<const Detection> dets);

/// Number of non-difficult ground-truth instances.
std::size_t count_positives(std::span<const GroundTruth> gts);

struct PRPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct PRCurve {
  std::vector<PRPoint> points;  // one per non-ignored detection, in rank order
  double ap = 0.0;
};

/// All-points AP with a monotone (right-to-left maximum) precision envelope.
/// Ignored labels are skipped. n_positives == 0 gives AP 0.
PRCurve average_precision(std::span<const MatchLabel> ranked, std::size_t n_positives);

enum class ViewCriterion {
  SameBin,       // discretize(det) == discretize(gt) with P views
  AngularError,  // angular error <= pi / P
};

/// Demotes true positives whose azimuth fails the view test.
std::vector<MatchLabel> relabel_by_view(std::span<const Match> matches,
                                        std::span<const Detection> dets,
                                        std::span<const GroundTruth> gts, int views,
                                        ViewCriterion criterion = ViewCriterion::SameBin);

PRCurve average_viewpoint_precision(std::span<const Detection> dets,
                                    std::span<const GroundTruth> gts, double iou_threshold,
                                    int views, ViewCriterion criterion = ViewCriterion::SameBin);

/// Unweighted mean. Throws on an empty map.
double mean_over_classes(const std::map<int, double>& per_class);

inline constexpr std::array<int, 4> kReportViews = {4, 8, 16, 24};

struct ClassMetrics {
  int class_id = 0;
  PRCurve ap;
  std::array<PRCurve, 4> avp;  // in kReportViews order
};

struct MetricsTable {
  std::vector<ClassMetrics> classes;
  double mean_ap = 0.0;
  std::array<double, 4> mean_avp{};
};

/// Per-class AP and AVP@{4,8,16,24} over classes 1..n_classes.
MetricsTable evaluate_detections(std::span<const Detection> dets,
                                 std::span<const GroundTruth> gts, int n_classes,
                                 double iou_threshold = 0.5,
                                 ViewCriterion criterion = ViewCriterion::SameBin);

/// Header: class,AP,AVP@4,AVP@8,AVP@16,AVP@24 ; one row per class, then `mean`.
inline constexpr const char* kMetricsHeader = "class,AP,AVP@4,AVP@8,AVP@16,AVP@24";
void write_metrics_csv(std::ostream& out, const MetricsTable& table);
std::string format_metric(double v);

}  // namespace poselab::metrics
