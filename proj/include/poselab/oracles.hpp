#pragma once

// Independent reference implementations used by tests, `selfcheck` and the
// acceptance runner. Nothing here calls the metrics module's matching or AP code.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "poselab/metrics.hpp"
#include "poselab/nnet.hpp"

namespace poselab::oracles {

struct Instance {
  std::vector<metrics::Detection> detections;
  std::vector<metrics::GroundTruth> ground_truth;
};

/// One class, up to `max_detections` / `max_ground_truth`, a handful of images,
/// scores on a coarse grid (ties are common), some difficult instances.
Instance random_instance(std::mt19937_64& rng, int max_detections = 12, int max_ground_truth = 6);

/// Detection indices in processing order: repeated selection of the highest
/// remaining score, lowest index among equals.
std::vector<std::size_t> selection_order(const std::vector<metrics::Detection>& dets);

/// Label of every detection, indexed like the input.
std::vector<metrics::MatchLabel> brute_labels(const Instance& inst, double iou_threshold);

/// Same, then true positives with a different lround-based view bin become FP.
std::vector<metrics::MatchLabel> brute_view_labels(const Instance& inst, double iou_threshold,
                                                   int views);

/// Bin of theta among P centred bins, computed by rounding theta / (2 pi / P).
int rounded_bin(double theta, int views);

/// Rectangle sum over every rank cut-off k: (R_k - R_{k-1}) * max_{j >= k} P_j.
double threshold_enumeration_ap(const std::vector<metrics::Detection>& dets,
                                const std::vector<metrics::MatchLabel>& labels,
                                std::size_t n_positives);

std::size_t brute_positive_count(const Instance& inst);

/// Straight-loop forward pass.
Eigen::VectorXd loop_forward(const nnet::Network& net, const Eigen::VectorXd& x);

struct MetricSuiteResult {
  int instances = 0;
  double max_ap_error = 0.0;
  double max_avp_error = 0.0;
  int label_mismatches = 0;
  int avp_above_ap = 0;

  bool passed(double tol = 1e-12) const {
    return max_ap_error <= tol && max_avp_error <= tol && label_mismatches == 0 &&
           avp_above_ap == 0;
  }
};

/// Compares metrics::{match_detections, average_precision, average_viewpoint_precision}
/// against the brute-force oracles for P in {4, 8, 16, 24}.
MetricSuiteResult metric_oracle_suite(int instances, std::uint64_t seed);

struct HeadCheck {
  std::string head;
  int instances = 0;
  double worst_relative_error = 0.0;
  std::size_t skipped_kinks = 0;
};

/// Finite-difference check of every loss head through a random rectifier
/// network: discrete NLL, circle positive/negative (K, delta) = (640, 1), and the
/// joint variants a/b1/b2 under L1, L2 and squared L2.
std::vector<HeadCheck> gradient_suite(int instances_per_head, std::uint64_t seed);

}  // namespace poselab::oracles
