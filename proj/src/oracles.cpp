#include "poselab/oracles.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <numbers>

#include "poselab/geometry.hpp"
#include "poselab/losses.hpp"

namespace poselab::oracles {

using metrics::MatchLabel;

namespace {

double overlap(const metrics::Box& a, const metrics::Box& b) {
  const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  const double inter = w * h;
  return inter / ((a.x2 - a.x1) * (a.y2 - a.y1) + (b.x2 - b.x1) * (b.y2 - b.y1) - inter);
}

metrics::Box random_box(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(0.0, 60.0), size(10.0, 40.0);
  const double x = pos(rng), y = pos(rng);
  return {x, y, x + size(rng), y + size(rng)};
}

metrics::Box nudge(const metrics::Box& b, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-4.0, 4.0);
  metrics::Box out{b.x1 + d(rng), b.y1 + d(rng), b.x2 + d(rng), b.y2 + d(rng)};
  if (!out.valid()) return b;
  return out;
}

}  // namespace

Instance random_instance(std::mt19937_64& rng, int max_detections, int max_ground_truth) {
  std::uniform_int_distribution<int> n_det(0, max_detections), n_gt(0, max_ground_truth);
  std::uniform_int_distribution<int> image(0, 2), grid(0, 8);
  std::uniform_real_distribution<double> unit(0.0, 1.0), angle(0.0, geometry::kTwoPi);
  Instance inst;
  const int g = n_gt(rng);
  for (int i = 0; i < g; ++i) {
    metrics::GroundTruth gt;
    gt.image_id = image(rng);
    gt.box = random_box(rng);
    gt.azimuth = angle(rng);
    gt.difficult = unit(rng) < 0.2;
    inst.ground_truth.push_back(gt);
  }
  const int d = n_det(rng);
  for (int i = 0; i < d; ++i) {
    metrics::Detection det;
    if (g > 0 && unit(rng) < 0.7) {
      const auto& gt = inst.ground_truth[static_cast<std::size_t>(
          std::uniform_int_distribution<int>(0, g - 1)(rng))];
      det.image_id = gt.image_id;
      det.box = nudge(gt.box, rng);
      det.azimuth = unit(rng) < 0.5 ? gt.azimuth + 0.3 * (unit(rng) - 0.5) : angle(rng);
    } else {
      det.image_id = image(rng);
      det.box = random_box(rng);
      det.azimuth = angle(rng);
    }
    det.score = grid(rng) / 8.0;
    inst.detections.push_back(det);
  }
  return inst;
}

std::vector<std::size_t> selection_order(const std::vector<metrics::Detection>& dets) {
  std::vector<bool> used(dets.size(), false);
  std::vector<std::size_t> order;
  for (std::size_t round = 0; round < dets.size(); ++round) {
    std::size_t pick = dets.size();
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (used[i]) continue;
      if (pick == dets.size() || dets[i].score > dets[pick].score) pick = i;
    }
    used[pick] = true;
    order.push_back(pick);
  }
  return order;
}

std::vector<MatchLabel> brute_labels(const Instance& inst, double iou_threshold) {
  const auto& dets = inst.detections;
  const auto& gts = inst.ground_truth;
  std::vector<MatchLabel> labels(dets.size(), MatchLabel::FalsePositive);
  std::vector<bool> claimed(gts.size(), false);
  for (const std::size_t i : selection_order(dets)) {
    double best = -1.0;
    std::size_t chosen = gts.size();
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      if (claimed[gi] || gts[gi].image_id != dets[i].image_id) continue;
      const double o = overlap(dets[i].box, gts[gi].box);
      if (o >= iou_threshold && o > best) {
        best = o;
        chosen = gi;
      }
    }
    if (chosen == gts.size()) continue;
    if (gts[chosen].difficult) {
      labels[i] = MatchLabel::Ignored;
    } else {
      labels[i] = MatchLabel::TruePositive;
      claimed[chosen] = true;
    }
  }
  return labels;
}

int rounded_bin(double theta, int views) {
  const double width = 2.0 * std::numbers::pi / views;
  const double t = std::fmod(std::fmod(theta, 2.0 * std::numbers::pi) + 2.0 * std::numbers::pi,
                             2.0 * std::numbers::pi);
  // Ties at bin edges round up, matching half-open [c - w/2, c + w/2) bins.
  const long k = static_cast<long>(std::floor(t / width + 0.5));
  return static_cast<int>(k % views) + 1;
}

std::vector<MatchLabel> brute_view_labels(const Instance& inst, double iou_threshold, int views) {
  const auto& dets = inst.detections;
  const auto& gts = inst.ground_truth;
  std::vector<MatchLabel> labels(dets.size(), MatchLabel::FalsePositive);
  std::vector<bool> claimed(gts.size(), false);
  for (const std::size_t i : selection_order(dets)) {
    double best = -1.0;
    std::size_t chosen = gts.size();
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      if (claimed[gi] || gts[gi].image_id != dets[i].image_id) continue;
      const double o = overlap(dets[i].box, gts[gi].box);
      if (o >= iou_threshold && o > best) {
        best = o;
        chosen = gi;
      }
    }
    if (chosen == gts.size()) continue;
    if (gts[chosen].difficult) {
      labels[i] = MatchLabel::Ignored;
      continue;
    }
    claimed[chosen] = true;
    labels[i] = rounded_bin(dets[i].azimuth, views) == rounded_bin(gts[chosen].azimuth, views)
                    ? MatchLabel::TruePositive
                    : MatchLabel::FalsePositive;
  }
  return labels;
}

double threshold_enumeration_ap(const std::vector<metrics::Detection>& dets,
                                const std::vector<MatchLabel>& labels, std::size_t n_positives) {
  if (n_positives == 0) return 0.0;
  std::vector<bool> tp;
  for (const std::size_t i : selection_order(dets))
    if (labels[i] != MatchLabel::Ignored) tp.push_back(labels[i] == MatchLabel::TruePositive);
  const std::size_t n = tp.size();
  std::vector<double> precision(n), recall(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t hits = 0;
    for (std::size_t j = 0; j <= k; ++j) hits += tp[j];
    precision[k] = static_cast<double>(hits) / static_cast<double>(k + 1);
    recall[k] = static_cast<double>(hits) / static_cast<double>(n_positives);
  }
  double ap = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double step = recall[k] - (k ? recall[k - 1] : 0.0);
    if (step == 0.0) continue;
    double best = 0.0;
    for (std::size_t j = k; j < n; ++j) best = std::max(best, precision[j]);
    ap += step * best;
  }
  return ap;
}

std::size_t brute_positive_count(const Instance& inst) {
  std::size_t n = 0;
  for (const auto& g : inst.ground_truth) n += g.difficult ? 0 : 1;
  return n;
}

Eigen::VectorXd loop_forward(const nnet::Network& net, const Eigen::VectorXd& x) {
  std::vector<double> a(x.data(), x.data() + x.size());
  for (const auto& layer : net.layers()) {
    std::vector<double> next(static_cast<std::size_t>(layer.out()));
    for (Eigen::Index r = 0; r < layer.out(); ++r) {
      double s = layer.bias[r];
      for (Eigen::Index c = 0; c < layer.in(); ++c)
        s += layer.weights(r, c) * a[static_cast<std::size_t>(c)];
      if (layer.activation == nnet::Activation::Rectifier && s < 0.0) s = 0.0;
      next[static_cast<std::size_t>(r)] = s;
    }
    a = std::move(next);
  }
  Eigen::VectorXd y(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) y[static_cast<Eigen::Index>(i)] = a[i];
  return y;
}

MetricSuiteResult metric_oracle_suite(int instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  MetricSuiteResult r;
  constexpr double kIou = 0.5;
  for (int n = 0; n < instances; ++n) {
    const Instance inst = random_instance(rng);
    ++r.instances;
    const std::size_t npos = brute_positive_count(inst);

    const auto expected = brute_labels(inst, kIou);
    const auto matches = metrics::match_detections(inst.detections, inst.ground_truth, kIou);
    std::vector<MatchLabel> ranked;
    for (const auto& m : matches) {
      if (m.label != expected[m.detection]) ++r.label_mismatches;
      ranked.push_back(m.label);
    }
    const double ap = metrics::average_precision(ranked, npos).ap;
    const double ap_oracle = threshold_enumeration_ap(inst.detections, expected, npos);
    r.max_ap_error = std::max(r.max_ap_error, std::abs(ap - ap_oracle));

    for (int views : metrics::kReportViews) {
      const double avp = metrics::average_viewpoint_precision(inst.detections, inst.ground_truth,
                                                              kIou, views)
                             .ap;
      const double avp_oracle = threshold_enumeration_ap(
          inst.detections, brute_view_labels(inst, kIou, views), npos);
      r.max_avp_error = std::max(r.max_avp_error, std::abs(avp - avp_oracle));
      if (avp > ap) ++r.avp_above_ap;
    }
  }
  return r;
}

namespace {

using Eigen::VectorXd;

// Redraw targets until every L1/L2 residual is clear of its kink.
constexpr double kKinkMargin = 1e-3;

struct HeadCase {
  std::string name;
  int out_dim;
  std::function<nnet::LossFn(std::mt19937_64&, const VectorXd& y0)> make;
};

std::vector<HeadCase> head_cases() {
  using losses::JointVariant;
  using losses::Norm;
  std::vector<HeadCase> cases;
  const losses::LossHyper reference_hyper{640.0, 1.0, 10.0, Norm::L1};

  {
    constexpr int N = 3, P = 8;
    cases.push_back({"discrete", N * P + 1, [](std::mt19937_64& rng, const VectorXd&) {
                       std::uniform_int_distribution<int> cls(0, N), bin(1, P);
                       const int c = cls(rng);
                       const auto t = c == 0 ? losses::DiscreteTarget::background(N, P)
                                             : losses::DiscreteTarget::object(N, P, c, bin(rng));
                       return nnet::LossFn([t](const VectorXd& y) {
                         const auto l = losses::discrete_head_loss(y, t);
                         return nnet::LossEval{l.value, l.grad};
                       });
                     }});
  }
  cases.push_back({"circle-positive", 3, [reference_hyper](std::mt19937_64& rng, const VectorXd&) {
                     std::uniform_real_distribution<double> a(0.0, geometry::kTwoPi);
                     const auto t = losses::CircleTarget::positive_at(geometry::Azimuth(a(rng)));
                     return nnet::LossFn([t, reference_hyper](const VectorXd& y) {
                       const auto l = losses::circle_loss(y, t, reference_hyper);
                       return nnet::LossEval{l.value, l.grad};
                     });
                   }});
  cases.push_back({"circle-negative", 3, [reference_hyper](std::mt19937_64&, const VectorXd&) {
                     const auto t = losses::CircleTarget::negative();
                     return nnet::LossFn([t, reference_hyper](const VectorXd& y) {
                       const auto l = losses::circle_loss(y, t, reference_hyper);
                       return nnet::LossEval{reference_hyper.k * l.value, reference_hyper.k * l.grad};
                     });
                   }});

  constexpr int N = 3;
  const std::pair<JointVariant, const char*> variants[] = {
      {JointVariant::A, "joint-a"}, {JointVariant::B1, "joint-b1"}, {JointVariant::B2, "joint-b2"}};
  const std::pair<Norm, const char*> norms[] = {
      {Norm::L1, "l1"}, {Norm::L2, "l2"}, {Norm::SquaredL2, "sql2"}};
  for (const auto& [variant, vname] : variants) {
    for (const auto& [norm, nname] : norms) {
      const int pose = static_cast<int>(losses::pose_dimension(variant, N));
      losses::LossHyper h{640.0, 1.0, 10.0, norm};
      cases.push_back(
          {std::string(vname) + "/" + nname, N + 1 + pose,
           [variant, h, pose](std::mt19937_64& rng, const VectorXd& y0) {
             std::uniform_int_distribution<int> cls(0, N);
             std::uniform_real_distribution<double> a(0.0, geometry::kTwoPi);
             losses::JointTarget t;
             for (int attempt = 0;; ++attempt) {
               t = losses::JointTarget::make(variant, N, cls(rng), geometry::Azimuth(a(rng)));
               const VectorXd d = y0.segment(N + 1, pose) - t.t_pose;
               if (d.cwiseAbs().minCoeff() > kKinkMargin || attempt > 100) break;
             }
             return nnet::LossFn([t, h, pose](const VectorXd& y) {
               const auto l = losses::joint_loss(y.head(N + 1), y.segment(N + 1, pose), t, h);
               VectorXd g(y.size());
               g << l.grad_class, l.grad_pose;
               return nnet::LossEval{l.value, g};
             });
           }});
    }
  }
  return cases;
}

}  // namespace

std::vector<HeadCheck> gradient_suite(int instances_per_head, std::uint64_t seed) {
  std::vector<HeadCheck> out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (const auto& hc : head_cases()) {
    HeadCheck check{hc.name, 0, 0.0, 0};
    for (int i = 0; i < instances_per_head; ++i) {
      const int widths[] = {5, 7, hc.out_dim};
      const auto net = nnet::Network::glorot(widths, nnet::Activation::Rectifier, rng());
      VectorXd x(5);
      for (auto& v : x) v = 1.5 * gauss(rng);
      const VectorXd y0 = nnet::forward(net, x);
      const auto loss = hc.make(rng, y0);
      nnet::GradCheckOptions opts;
      opts.seed = rng();
      const auto report = nnet::grad_check(net, loss, x, opts);
      ++check.instances;
      check.worst_relative_error = std::max(check.worst_relative_error, report.max_relative_error);
      check.skipped_kinks += report.skipped_kinks;
    }
    out.push_back(check);
  }
  return out;
}

}  // namespace poselab::oracles
