#pragma once

// Synthetic stand-in for an annotated detection benchmark: labeled feature
// patches for training, detection scenarios for evaluation, line-oriented file
// formats, and balanced batch sampling.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "poselab/metrics.hpp"

namespace poselab::data {

struct WorldParams {
  int classes = 3;
  int feature_dim = 32;
  double mean_norm = 5.0;           // distance of each class centre from the origin
  double signal_radius = 3.0;       // radius of the per-class appearance circle
  double noise_sigma = 0.25;        // isotropic feature noise on positives
  double background_spread = 1.0;  // std-dev of background features
  // Fraction of training annotations whose azimuth is mirrored (theta -> -theta),
  // modelling left/right confusions of near-symmetric objects.
  double mirror_label_noise = 0.3;
  // Share of negatives cut near an object: class-c features off its appearance
  // ring, at radial scale in [0, 1 - gap] or [1 + gap, 2].
  double hard_negative_fraction = 0.3;
  double hard_negative_gap = 0.3;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ClassModel {
  Eigen::VectorXd mean;
  Eigen::VectorXd cos_axis;  // unit, orthogonal to mean and sin_axis
  Eigen::VectorXd sin_axis;
  double radius = 1.0;
};

/// Positive features of class c at azimuth t: mean_c + r (cos t u_c + sin t v_c) + noise.
/// Class means are pairwise further apart than max(4 sigma, mean_norm).
class World {
 public:
  static World build(const WorldParams& params);

  const WorldParams& params() const { return params_; }
  const ClassModel& model(int class_id) const { return classes_.at(class_id - 1); }
  int classes() const { return params_.classes; }
  int feature_dim() const { return params_.feature_dim; }

  /// Noiseless appearance of class `class_id` at `theta`.
  Eigen::VectorXd appearance(int class_id, double theta) const;
  /// Noiseless hard negative of class `class_id`: mean + scale * radius * (cos phi, sin phi).
  Eigen::VectorXd off_ring(int class_id, double radial_scale, double phi) const;
  /// Mirror x through the class plane's cosine axis (theta -> -theta).
  Eigen::VectorXd mirror(int class_id, const Eigen::VectorXd& x) const;
  /// (cos, sin) coordinates of x in the class signal plane, divided by the radius.
  Eigen::Vector2d signal_coordinates(int class_id, const Eigen::VectorXd& x) const;

 private:
  WorldParams params_;
  std::vector<ClassModel> classes_;
};

inline constexpr double kNoAzimuth = std::numeric_limits<double>::quiet_NaN();

struct Sample {
  Eigen::VectorXd features;
  int class_id = 0;               // 0 = background
  double azimuth = kNoAzimuth;    // radians, NaN for background

  bool positive() const { return class_id > 0; }
};

/// Structural equality; NaN azimuths compare equal.
bool same_sample(const Sample& a, const Sample& b);

struct SampleOptions {
  bool annotation_noise = true;  // apply mirror_label_noise to the labels
  std::uint64_t stream = 0;      // independent draws from the same world
};

/// Each sample is positive with probability `positive_fraction`; positives have a
/// uniform class and uniform azimuth. Deterministic in (world seed, stream).
std::vector<Sample> generate_samples(const World& world, long n, double positive_fraction,
                                     const SampleOptions& options = {});

/// Appends, for every positive, its mirror image with azimuth 2 pi - theta.
std::vector<Sample> with_flips(const World& world, std::vector<Sample> samples);

struct BatchPlan {
  int batch_size = 128;
  int positives = 32;
  int negatives = 96;

  void validate() const;
};

/// Draws `plan.positives` positives (class chosen uniformly, then a uniform
/// sample of it) and `plan.negatives` negatives, without replacement inside a batch.
class BatchSampler {
 public:
  BatchSampler(std::span<const Sample> pool, BatchPlan plan, std::uint64_t seed);

  /// Indices into the pool.
  std::vector<std::size_t> next();

 private:
  BatchPlan plan_;
  std::vector<std::vector<std::size_t>> by_class_;  // [0] = background
  std::vector<int> present_classes_;
  std::size_t n_positive_ = 0;
  std::mt19937_64 rng_;
};

std::vector<Sample> sample_batch(std::span<const Sample> pool, const BatchPlan& plan,
                                 std::uint64_t seed);

/// Disjoint split: the validation part holds round(validation_size * positive_ratio)
/// positives, the rest negatives.
struct Split {
  std::vector<Sample> train;
  std::vector<Sample> validation;
};
Split split_validation(std::vector<Sample> pool, int validation_size, double positive_ratio,
                       std::uint64_t seed);

struct ScenarioOptions {
  int images = 200;
  int max_objects_per_image = 3;
  int distractors_per_image = 6;
  double difficult_fraction = 0.1;
  double box_jitter = 0.08;      // per-coordinate jitter as a fraction of box size
  bool nested_azimuths = false;  // ground-truth azimuths restricted to multiples of pi/2
  std::uint64_t seed = 1;
};

/// A candidate window to be scored by a model.
struct Proposal {
  int image_id = 0;
  metrics::Box box;
  Eigen::VectorXd features;
  int source = -1;  // index of the ground truth it was cut around, -1 for distractors
};

struct DetectionScenario {
  std::vector<metrics::GroundTruth> ground_truth;
  std::vector<Proposal> proposals;
};

/// Ground truth in disjoint cells of a 1000x1000 image, one proposal per object
/// (IoU >= 0.5 with it) carrying clean positive features, and distractor
/// proposals with background features and IoU < 0.3 with every object.
DetectionScenario generate_detection_scenario(const World& world,
                                              const ScenarioOptions& options);

struct OracleDetectionOptions {
  double azimuth_offset = 0.0;      // added to the true azimuth of object proposals
  double azimuth_noise = 0.0;       // gaussian std-dev on top of the offset
  double object_score_min = 0.3;    // object proposals score U[min, 1)
  double distractor_score_max = 0.7;// distractors score U[0, max)
  bool include_distractors = true;
  std::uint64_t seed = 7;
};

/// Detections with known labels: `expected[i]` is the label detection i must
/// receive from box matching (distractors FP, difficult objects Ignored).
struct LabeledDetections {
  std::vector<metrics::Detection> detections;
  std::vector<metrics::MatchLabel> expected;
};
LabeledDetections oracle_detections(const DetectionScenario& scenario, int classes,
                                    const OracleDetectionOptions& options);

// File formats: one record per line, '#' starts a comment line, reals printed
// with 17 significant digits.
//   samples:      class_id azimuth f_1 ... f_D        (background azimuth: nan)
//   detections:   image_id class_id score x1 y1 x2 y2 azimuth
//   ground truth: image_id class_id x1 y1 x2 y2 azimuth difficult{0,1}
//   proposals:    image_id source x1 y1 x2 y2 f_1 ... f_D
void write_samples(std::ostream& out, std::span<const Sample> samples);
std::vector<Sample> read_samples(std::istream& in);
void write_detections(std::ostream& out, std::span<const metrics::Detection> dets);
std::vector<metrics::Detection> read_detections(std::istream& in);
void write_ground_truth(std::ostream& out, std::span<const metrics::GroundTruth> gts);
std::vector<metrics::GroundTruth> read_ground_truth(std::istream& in);
void write_proposals(std::ostream& out, std::span<const Proposal> proposals);
std::vector<Proposal> read_proposals(std::istream& in);

void save_samples(const std::filesystem::path& path, std::span<const Sample> samples);
std::vector<Sample> load_samples(const std::filesystem::path& path);
void save_detections(const std::filesystem::path& path, std::span<const metrics::Detection> dets);
std::vector<metrics::Detection> load_detections(const std::filesystem::path& path);
void save_ground_truth(const std::filesystem::path& path,
                       std::span<const metrics::GroundTruth> gts);
std::vector<metrics::GroundTruth> load_ground_truth(const std::filesystem::path& path);
void save_proposals(const std::filesystem::path& path, std::span<const Proposal> proposals);
std::vector<Proposal> load_proposals(const std::filesystem::path& path);

/// splitmix64 mixing of (seed, stream) into an independent 64-bit seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace poselab::data
