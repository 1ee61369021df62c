#include "poselab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <ostream>

#include "poselab/error.hpp"

namespace poselab::metrics {

double iou(const Box& a, const Box& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

std::vector<std::size_t> rank_by_score(std::span<const Detection> dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  return order;
}

std::vector<Match> match_detections(std::span<const Detection> dets,
                                    std::span<const GroundTruth> gts, double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0))
    throw ConfigError("IoU threshold must lie in (0, 1]");
  std::vector<bool> claimed(gts.size(), false);
  std::vector<Match> out;
  out.reserve(dets.size());
  for (const std::size_t d : rank_by_score(dets)) {
    Match m{d, MatchLabel::FalsePositive, std::nullopt};
    double best = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gts[g].image_id != dets[d].image_id || claimed[g]) continue;
      const double o = iou(dets[d].box, gts[g].box);
      if (o >= iou_threshold && o > best) {
        best = o;
        m.ground_truth = g;
      }
    }
    if (m.ground_truth) {
      if (gts[*m.ground_truth].difficult) {
        m.label = MatchLabel::Ignored;
      } else {
        m.label = MatchLabel::TruePositive;
        claimed[*m.ground_truth] = true;
      }
    }
    out.push_back(m);
  }
  return out;
}

std::size_t count_positives(std::span<const GroundTruth> gts) {
  return static_cast<std::size_t>(
      std::count_if(gts.begin(), gts.end(), [](const GroundTruth& g) { return !g.difficult; }));
}

PRCurve average_precision(std::span<const MatchLabel> ranked, std::size_t n_positives) {
  PRCurve curve;
  std::vector<bool> is_tp;
  std::size_t tp = 0, fp = 0;
  for (const MatchLabel label : ranked) {
    if (label == MatchLabel::Ignored) continue;
    if (label == MatchLabel::TruePositive)
      ++tp;
    else
      ++fp;
    is_tp.push_back(label == MatchLabel::TruePositive);
    const double recall =
        n_positives > 0 ? static_cast<double>(tp) / static_cast<double>(n_positives) : 0.0;
    curve.points.push_back({recall, static_cast<double>(tp) / static_cast<double>(tp + fp)});
  }
  if (n_positives == 0) return curve;

  double envelope = 0.0;
  double ap = 0.0;
  for (std::size_t i = curve.points.size(); i-- > 0;) {
    envelope = std::max(envelope, curve.points[i].precision);
    if (is_tp[i]) ap += envelope;
  }
  curve.ap = ap / static_cast<double>(n_positives);
  return curve;
}

std::vector<MatchLabel> relabel_by_view(std::span<const Match> matches,
                                        std::span<const Detection> dets,
                                        std::span<const GroundTruth> gts, int views,
                                        ViewCriterion criterion) {
  if (views < 2) throw ConfigError("view count must be at least 2");
  std::vector<MatchLabel> labels;
  labels.reserve(matches.size());
  for (const Match& m : matches) {
    MatchLabel label = m.label;
    if (label == MatchLabel::TruePositive) {
      const geometry::Azimuth predicted(dets[m.detection].azimuth);
      const geometry::Azimuth truth(gts[*m.ground_truth].azimuth);
      bool correct = false;
      if (criterion == ViewCriterion::SameBin) {
        correct = geometry::discretize(predicted, views) == geometry::discretize(truth, views);
      } else {
        correct = geometry::angular_distance(predicted, truth) <= std::numbers::pi / views;
      }
      if (!correct) label = MatchLabel::FalsePositive;
    }
    labels.push_back(label);
  }
  return labels;
}

PRCurve average_viewpoint_precision(std::span<const Detection> dets,
                                    std::span<const GroundTruth> gts, double iou_threshold,
                                    int views, ViewCriterion criterion) {
  const auto matches = match_detections(dets, gts, iou_threshold);
  const auto labels = relabel_by_view(matches, dets, gts, views, criterion);
  return average_precision(labels, count_positives(gts));
}

double mean_over_classes(const std::map<int, double>& per_class) {
  if (per_class.empty()) throw Error("mean_over_classes: no classes");
  double sum = 0.0;
  for (const auto& [cls, v] : per_class) sum += v;
  return sum / static_cast<double>(per_class.size());
}

MetricsTable evaluate_detections(std::span<const Detection> dets,
                                 std::span<const GroundTruth> gts, int n_classes,
                                 double iou_threshold, ViewCriterion criterion) {
  if (n_classes < 1) throw ConfigError("evaluate_detections: need at least one class");
  MetricsTable table;
  std::map<int, double> ap;
  std::array<std::map<int, double>, 4> avp;
  for (int c = 1; c <= n_classes; ++c) {
    std::vector<Detection> cd;
    std::vector<GroundTruth> cg;
    std::copy_if(dets.begin(), dets.end(), std::back_inserter(cd),
                 [c](const Detection& d) { return d.class_id == c; });
    std::copy_if(gts.begin(), gts.end(), std::back_inserter(cg),
                 [c](const GroundTruth& g) { return g.class_id == c; });
    const auto matches = match_detections(cd, cg, iou_threshold);
    const std::size_t npos = count_positives(cg);
    ClassMetrics cm;
    cm.class_id = c;
    std::vector<MatchLabel> labels;
    for (const auto& m : matches) labels.push_back(m.label);
    cm.ap = average_precision(labels, npos);
    ap[c] = cm.ap.ap;
    for (std::size_t v = 0; v < kReportViews.size(); ++v) {
      cm.avp[v] =
          average_precision(relabel_by_view(matches, cd, cg, kReportViews[v], criterion), npos);
      avp[v][c] = cm.avp[v].ap;
    }
    table.classes.push_back(std::move(cm));
  }
  table.mean_ap = mean_over_classes(ap);
  for (std::size_t v = 0; v < kReportViews.size(); ++v) table.mean_avp[v] = mean_over_classes(avp[v]);
  return table;
}

std::string format_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void write_metrics_csv(std::ostream& out, const MetricsTable& table) {
  out << kMetricsHeader << "\n";
  for (const auto& c : table.classes) {
    out << c.class_id << "," << format_metric(c.ap.ap);
    for (const auto& a : c.avp) out << "," << format_metric(a.ap);
    out << "\n";
  }
  out << "mean," << format_metric(table.mean_ap);
  for (const double a : table.mean_avp) out << "," << format_metric(a);
  out << "\n";
}

}  // namespace poselab::metrics
