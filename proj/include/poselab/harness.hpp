#pragma once

// Training protocol (balanced batches, SGD with momentum, plateau-triggered
// learning-rate halving), per-representation prediction, evaluation and sweeps.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "poselab/data.hpp"
#include "poselab/error.hpp"
#include "poselab/losses.hpp"
#include "poselab/metrics.hpp"
#include "poselab/nnet.hpp"

namespace poselab::harness {

enum class Representation { Discrete, Continuous, JointA, JointB1, JointB2 };

std::string_view to_string(Representation r);
Representation parse_representation(std::string_view s);  // discrete, continuous, joint-a, ...
std::string_view to_string(losses::Norm n);
losses::Norm parse_norm(std::string_view s);                // l1, l2, sql2

bool is_joint(Representation r);
losses::JointVariant joint_variant(Representation r);

struct EvalSettings {
  data::ScenarioOptions scenario;
  double iou_threshold = 0.5;
  metrics::ViewCriterion criterion = metrics::ViewCriterion::SameBin;
};

struct ExperimentConfig {
  Representation representation = Representation::Discrete;
  int views = 8;                     // P, discrete head only
  std::vector<int> hidden = {64, 64};
  losses::LossHyper hyper;
  data::BatchPlan plan;
  data::WorldParams world;
  long pool_size = 30000;            // generated patches before flips and split
  double pool_positive_fraction = 0.4;
  bool flip_augmentation = true;
  double initial_lr = 1e-3;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  int lr_halving_patience = 10;
  int eval_every = 500;
  int validation_size = 6400;
  long max_iterations = 20000;
  double lr_floor = 1e-7;
  std::uint64_t seed = 0;
  EvalSettings eval;

  int classes() const { return world.classes; }
  /// Throws ConfigError naming the violated constraint.
  void validate() const;

  /// Protocol defaults; the continuous head uses lr 5e-5 and 8/120 batches.
  static ExperimentConfig defaults(Representation r);
};

/// Halve the learning rate after `patience` consecutive evaluations without a
/// strict improvement over the best validation loss seen so far.
class PlateauSchedule {
 public:
  PlateauSchedule(double initial_lr, int patience);

  /// Feed one validation loss; returns the learning rate to use from now on.
  double observe(double validation_loss);
  double learning_rate() const { return lr_; }
  int halvings() const { return halvings_; }
  double best() const { return best_; }

 private:
  double lr_;
  int patience_;
  double best_;
  int stale_ = 0;
  int halvings_ = 0;
};

struct TraceRecord {
  long iteration = 0;
  double train_loss = 0.0;       // mean batch loss since the previous evaluation
  double validation_loss = 0.0;
  double learning_rate = 0.0;    // rate in force after this evaluation
};

struct TrainingTrace {
  std::vector<TraceRecord> records;
  double initial_validation_loss = 0.0;
};

void write_trace_csv(std::ostream& out, const TrainingTrace& trace);

/// A trained predictor. Joint heads trained with lambda = 0 score detections with
/// a separately trained, frozen reference classifier.
struct Model {
  Representation representation = Representation::Discrete;
  int classes = 1;
  int views = 8;
  nnet::Network net;
  std::optional<nnet::Network> reference;
};

Eigen::Index output_dim(Representation r, int classes, int views);

void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

struct TrainingData {
  std::vector<data::Sample> train;
  std::vector<data::Sample> validation;
};

/// Pool from the configured world, flips on the training part when enabled,
/// validation split with the batch plan's positive proportion.
TrainingData make_training_data(const ExperimentConfig& config);

struct TrainResult {
  Model model;
  TrainingTrace trace;
};

/// Thrown when the training loss becomes non-finite; carries the trace so far.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& what, TrainingTrace trace)
      : Error(what), trace_(std::move(trace)) {}
  const TrainingTrace& trace() const { return trace_; }

 private:
  TrainingTrace trace_;
};

/// `reference` supplies an already trained detection classifier for lambda = 0
/// joint runs (otherwise one is trained first). The hooks are for tests:
/// `validation_override` replaces the measured validation loss at evaluation e
/// (0-based); `on_step` sees every gradient before the optimizer step.
struct TrainOptions {
  const nnet::Network* reference = nullptr;
  std::function<double(int evaluation, double measured)> validation_override;
  std::function<void(long iteration, const nnet::Gradients&)> on_step;
};

TrainResult train(const ExperimentConfig& config, const TrainingData& data,
                  const TrainOptions& options = {});

/// Detection-only classifier over N + 1 classes (a one-view discrete head).
TrainResult train_reference_classifier(const ExperimentConfig& config, const TrainingData& data);

/// Mean objective of `model` over `samples` with the training loss of its head.
double validation_loss(const Model& model, const ExperimentConfig& config,
                       const std::vector<data::Sample>& samples);

struct Prediction {
  Eigen::VectorXd scores;        // [0] background, [c] class c
  std::vector<double> azimuths;  // [c] azimuth if the input is of class c; [0] unused

  int top_class() const;         // argmax over classes 1..N
  double azimuth() const { return azimuths.at(static_cast<std::size_t>(top_class())); }
};

/// Interpret one raw network output. `class_scores` (N + 1 probabilities), when
/// given, replaces the scores of joint heads.
Prediction interpret_output(Representation r, int classes, int views,
                            const Eigen::Ref<const Eigen::VectorXd>& y,
                            const Eigen::VectorXd* class_scores = nullptr);
Prediction predict(const Model& model, const Eigen::Ref<const Eigen::VectorXd>& x);
std::vector<Prediction> predict_batch(const Model& model, const Eigen::MatrixXd& x);

/// Scores every proposal for every class.
std::vector<metrics::Detection> detect(const Model& model, const data::DetectionScenario& scenario);

metrics::MetricsTable evaluate(const Model& model, const ExperimentConfig& config,
                               const data::DetectionScenario& scenario);

/// Same with an arbitrary scorer in place of the network (oracle injection).
using Scorer = std::function<Prediction(const data::Proposal&)>;
metrics::MetricsTable evaluate_with(const Scorer& scorer, const ExperimentConfig& config,
                                    const data::DetectionScenario& scenario);

data::DetectionScenario make_scenario(const ExperimentConfig& config);

/// Names accepted by sweep(): short aliases of the numeric config keys.
std::vector<std::string> sweep_axes();

struct SweepPoint {
  double value = 0.0;
  metrics::MetricsTable metrics;
};

struct SweepReport {
  std::string axis;
  std::vector<SweepPoint> points;
};

/// Trains and evaluates once per value with shared seeds. Throws ConfigError for
/// an unknown axis (the message lists the valid ones).
SweepReport sweep(const std::string& axis, const std::vector<double>& values,
                  const ExperimentConfig& base, int jobs = 1);

/// Rows AP, AVP@4.., columns one per swept value.
void write_sweep_csv(std::ostream& out, const SweepReport& report);
void write_sweep_svg(std::ostream& out, const SweepReport& report);

}  // namespace poselab::harness
