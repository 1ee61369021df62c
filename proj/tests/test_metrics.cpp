#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "poselab/error.hpp"
#include "poselab/metrics.hpp"
#include "poselab/oracles.hpp"

using namespace poselab;
using namespace poselab::metrics;

namespace {

Detection det(double score, Box b, double az = 0.0, int image = 0) {
  Detection d;
  d.image_id = image;
  d.score = score;
  d.box = b;
  d.azimuth = az;
  return d;
}

GroundTruth gt(Box b, double az = 0.0, bool difficult = false, int image = 0) {
  GroundTruth g;
  g.image_id = image;
  g.box = b;
  g.azimuth = az;
  g.difficult = difficult;
  return g;
}

double ap_of(const std::vector<Detection>& dets, const std::vector<GroundTruth>& gts) {
  const auto m = match_detections(dets, gts);
  std::vector<MatchLabel> labels;
  for (const auto& x : m) labels.push_back(x.label);
  return average_precision(labels, count_positives(gts)).ap;
}

}  // namespace

TEST_CASE("iou examples") {
  const Box a{0, 0, 10, 10};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, Box{20, 20, 30, 30}) == 0.0);
  CHECK(iou(a, Box{10, 0, 20, 10}) == 0.0);
  CHECK(iou(a, Box{5, 0, 15, 10}) == doctest::Approx(50.0 / 150.0).epsilon(1e-15));
}

TEST_CASE("iou is symmetric and bounded") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  for (int i = 0; i < 2000; ++i) {
    const double ax = u(rng), ay = u(rng), bx = u(rng), by = u(rng);
    const Box a{ax, ay, ax + 1 + u(rng), ay + 1 + u(rng)};
    const Box b{bx, by, bx + 1 + u(rng), by + 1 + u(rng)};
    const double v = iou(a, b);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(v == iou(b, a));
  }
}

TEST_CASE("match_detections examples") {
  const Box g{0, 0, 10, 10};
  {
    const std::vector<Detection> d = {det(0.9, Box{0, 0, 10, 9})};
    const std::vector<GroundTruth> t = {gt(g)};
    const auto m = match_detections(d, t);
    REQUIRE(m.size() == 1);
    CHECK(m[0].label == MatchLabel::TruePositive);
    CHECK(m[0].ground_truth == std::size_t{0});
  }
  {
    const std::vector<Detection> d = {det(0.3, g), det(0.8, Box{0, 0, 10, 9})};
    const std::vector<GroundTruth> t = {gt(g)};
    const auto m = match_detections(d, t);
    REQUIRE(m.size() == 2);
    CHECK(m[0].detection == 1);
    CHECK(m[0].label == MatchLabel::TruePositive);
    CHECK(m[1].detection == 0);
    CHECK(m[1].label == MatchLabel::FalsePositive);
  }
  {
    // Difficult instances are ignored and never claimed.
    const std::vector<Detection> d = {det(0.9, g), det(0.8, g)};
    const std::vector<GroundTruth> t = {gt(g, 0.0, true)};
    const auto m = match_detections(d, t);
    CHECK(m[0].label == MatchLabel::Ignored);
    CHECK(m[1].label == MatchLabel::Ignored);
    CHECK(count_positives(t) == 0);
  }
  {
    // Other images never match.
    const std::vector<Detection> d = {det(0.9, g, 0.0, 1)};
    const std::vector<GroundTruth> t = {gt(g, 0.0, false, 0)};
    CHECK(match_detections(d, t)[0].label == MatchLabel::FalsePositive);
  }
}

TEST_CASE("rank_by_score breaks ties by index") {
  const std::vector<Detection> d = {det(0.5, {}), det(0.9, {}), det(0.5, {}), det(0.9, {})};
  CHECK(rank_by_score(d) == std::vector<std::size_t>{1, 3, 0, 2});
}

TEST_CASE("match_detections agrees with the brute-force oracle") {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 1000; ++i) {
    const auto inst = oracles::random_instance(rng, i % 2 ? 3 : 12, i % 2 ? 2 : 6);
    const auto expect = oracles::brute_labels(inst, 0.5);
    const auto m = match_detections(inst.detections, inst.ground_truth, 0.5);
    REQUIRE(m.size() == inst.detections.size());
    for (const auto& x : m) CHECK(x.label == expect[x.detection]);
  }
}

TEST_CASE("average_precision examples") {
  using L = MatchLabel;
  CHECK(average_precision(std::vector{L::TruePositive}, 1).ap == 1.0);
  CHECK(average_precision(std::vector{L::FalsePositive, L::TruePositive}, 1).ap ==
        doctest::Approx(0.5));
  CHECK(average_precision(std::vector{L::TruePositive, L::FalsePositive}, 2).ap ==
        doctest::Approx(0.5));
  CHECK(average_precision(std::vector<L>{}, 0).ap == 0.0);
  CHECK(average_precision(std::vector{L::Ignored, L::TruePositive}, 1).ap == 1.0);
  // (TP, FP, TP), 2 positives: 0.5*1 + 0.5*(2/3).
  const auto c = average_precision(std::vector{L::TruePositive, L::FalsePositive, L::TruePositive}, 2);
  CHECK(c.ap == doctest::Approx(0.5 + 1.0 / 3.0));
  CHECK(c.points.size() == 3);
  CHECK(c.points[2].recall == 1.0);
}

TEST_CASE("average_precision agrees with threshold enumeration") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 1000; ++i) {
    const auto inst = oracles::random_instance(rng);
    const auto labels = oracles::brute_labels(inst, 0.5);
    const double expect =
        oracles::threshold_enumeration_ap(inst.detections, labels, oracles::brute_positive_count(inst));
    CHECK(std::abs(ap_of(inst.detections, inst.ground_truth) - expect) <= 1e-12);
  }
}

TEST_CASE("AVP examples") {
  const Box g{0, 0, 10, 10};
  const std::vector<GroundTruth> t = {gt(g, 1.0)};
  const std::vector<Detection> exact = {det(0.9, g, 1.0)};
  for (int p : {4, 8, 16, 24})
    CHECK(average_viewpoint_precision(exact, t, 0.5, p).ap == ap_of(exact, t));
  const std::vector<Detection> opposite = {det(0.9, g, 1.0 + std::numbers::pi)};
  CHECK(ap_of(opposite, t) == 1.0);
  CHECK(average_viewpoint_precision(opposite, t, 0.5, 4).ap == 0.0);
  CHECK(average_viewpoint_precision(opposite, t, 0.5, 4, ViewCriterion::AngularError).ap == 0.0);
}

TEST_CASE("AVP agrees with relabel-then-AP oracle and never exceeds AP") {
  std::mt19937_64 rng(14);
  for (int i = 0; i < 1000; ++i) {
    const auto inst = oracles::random_instance(rng);
    const double ap = ap_of(inst.detections, inst.ground_truth);
    const auto n = oracles::brute_positive_count(inst);
    for (int p : {4, 8, 16, 24}) {
      const double avp =
          average_viewpoint_precision(inst.detections, inst.ground_truth, 0.5, p).ap;
      const auto labels = oracles::brute_view_labels(inst, 0.5, p);
      CHECK(std::abs(avp - oracles::threshold_enumeration_ap(inst.detections, labels, n)) <= 1e-12);
      CHECK(avp <= ap + 1e-15);
      const double err =
          average_viewpoint_precision(inst.detections, inst.ground_truth, 0.5, p,
                                      ViewCriterion::AngularError).ap;
      CHECK(err <= ap + 1e-15);
    }
  }
}

TEST_CASE("AVP is non-increasing in P when ground truth sits on the coarse grid") {
  std::mt19937_64 rng(15);
  std::uniform_int_distribution<int> quarter(0, 3);
  for (int i = 0; i < 500; ++i) {
    auto inst = oracles::random_instance(rng);
    for (auto& g : inst.ground_truth) g.azimuth = quarter(rng) * std::numbers::pi / 2;
    double prev = 2.0;
    for (int p : {4, 8, 16, 24}) {
      const double avp =
          average_viewpoint_precision(inst.detections, inst.ground_truth, 0.5, p).ap;
      CHECK(avp <= prev + 1e-15);
      prev = avp;
    }
  }
}

TEST_CASE("AP is invariant under strictly monotone score transforms") {
  std::mt19937_64 rng(16);
  for (int i = 0; i < 500; ++i) {
    const auto inst = oracles::random_instance(rng);
    auto moved = inst.detections;
    for (auto& d : moved) d.score = std::exp(3.0 * d.score) - 7.0;
    CHECK(ap_of(inst.detections, inst.ground_truth) == ap_of(moved, inst.ground_truth));
  }
}

TEST_CASE("inserting a bottom FP never raises AP; a top TP never lowers it") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 500; ++i) {
    auto inst = oracles::random_instance(rng);
    const double base = ap_of(inst.detections, inst.ground_truth);

    auto with_fp = inst.detections;
    with_fp.push_back(det(-100.0, Box{1000, 1000, 1001, 1001}));
    CHECK(ap_of(with_fp, inst.ground_truth) <= base + 1e-15);

    // A fresh non-difficult GT plus a top-scored detection exactly on it.
    auto gts = inst.ground_truth;
    gts.push_back(gt(Box{500, 500, 510, 510}));
    auto with_tp = inst.detections;
    with_tp.push_back(det(100.0, Box{500, 500, 510, 510}));
    const double before = ap_of(inst.detections, gts);
    CHECK(ap_of(with_tp, gts) >= before - 1e-15);
  }
}

TEST_CASE("mean_over_classes") {
  CHECK(mean_over_classes({{1, 0.4}}) == doctest::Approx(0.4));
  CHECK(mean_over_classes({{1, 0.0}, {2, 1.0}}) == doctest::Approx(0.5));
  const std::map<int, double> row = {{1, 58.9}, {2, 53.8}, {3, 24.8}, {4, 23.3},
                                     {5, 56.9}, {6, 44.6}, {7, 16.6}, {8, 28.3},
                                     {9, 57.4}, {10, 27.6}, {11, 42.3}, {12, 54.8}};
  CHECK(std::abs(mean_over_classes(row) - 40.8) <= 0.05);
  CHECK_THROWS_AS(mean_over_classes({}), Error);
}

TEST_CASE("evaluate_detections table and CSV") {
  const Box g{0, 0, 10, 10};
  const std::vector<GroundTruth> t = {gt(g, 0.0), [&] {
                                        auto x = gt(g, 0.0);
                                        x.class_id = 2;
                                        return x;
                                      }()};
  std::vector<Detection> d = {det(0.9, g, 0.0)};
  auto d2 = det(0.8, g, std::numbers::pi);
  d2.class_id = 2;
  d.push_back(d2);
  const auto table = evaluate_detections(d, t, 2);
  REQUIRE(table.classes.size() == 2);
  CHECK(table.classes[0].ap.ap == 1.0);
  CHECK(table.classes[1].ap.ap == 1.0);
  CHECK(table.classes[1].avp[0].ap == 0.0);
  CHECK(table.mean_ap == 1.0);
  CHECK(table.mean_avp[0] == 0.5);
  std::ostringstream out;
  write_metrics_csv(out, table);
  CHECK(out.str() ==
        "class,AP,AVP@4,AVP@8,AVP@16,AVP@24\n"
        "1,1.000000,1.000000,1.000000,1.000000,1.000000\n"
        "2,1.000000,0.000000,0.000000,0.000000,0.000000\n"
        "mean,1.000000,0.500000,0.500000,0.500000,0.500000\n");
  CHECK_THROWS_AS(evaluate_detections(d, t, 0), ConfigError);
}

TEST_CASE("metric oracle suite passes") {
  const auto r = oracles::metric_oracle_suite(200, 5);
  CHECK(r.instances == 200);
  CHECK(r.passed());
}
