#include "poselab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "poselab/config.hpp"
#include "poselab/geometry.hpp"
#include "poselab/svg.hpp"

namespace poselab::harness {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string_view to_string(Representation r) {
  switch (r) {
    case Representation::Discrete: return "discrete";
    case Representation::Continuous: return "continuous";
    case Representation::JointA: return "joint-a";
    case Representation::JointB1: return "joint-b1";
    case Representation::JointB2: return "joint-b2";
  }
  return "?";
}

Representation parse_representation(std::string_view s) {
  for (auto r : {Representation::Discrete, Representation::Continuous, Representation::JointA,
                 Representation::JointB1, Representation::JointB2})
    if (to_string(r) == s) return r;
  throw ConfigError("unknown representation '" + std::string(s) +
                    "' (expected discrete, continuous, joint-a, joint-b1, joint-b2)");
}

std::string_view to_string(losses::Norm n) {
  switch (n) {
    case losses::Norm::L1: return "l1";
    case losses::Norm::L2: return "l2";
    case losses::Norm::SquaredL2: return "sql2";
  }
  return "?";
}

losses::Norm parse_norm(std::string_view s) {
  for (auto n : {losses::Norm::L1, losses::Norm::L2, losses::Norm::SquaredL2})
    if (to_string(n) == s) return n;
  throw ConfigError("unknown norm '" + std::string(s) + "' (expected l1, l2, sql2)");
}

bool is_joint(Representation r) {
  return r == Representation::JointA || r == Representation::JointB1 ||
         r == Representation::JointB2;
}

losses::JointVariant joint_variant(Representation r) {
  switch (r) {
    case Representation::JointA: return losses::JointVariant::A;
    case Representation::JointB1: return losses::JointVariant::B1;
    case Representation::JointB2: return losses::JointVariant::B2;
    default: throw ConfigError("representation " + std::string(to_string(r)) + " is not joint");
  }
}

void ExperimentConfig::validate() const {
  world.validate();
  hyper.validate();
  plan.validate();
  if (representation == Representation::Continuous && classes() != 1) {
    throw ConfigError("the continuous representation is single-class: world.classes must be 1, got " +
                      std::to_string(classes()));
  }
  if (representation == Representation::Discrete && views < 2)
    throw ConfigError("model.views must be >= 2 for the discrete representation");
  for (int w : hidden)
    if (w < 1) throw ConfigError("model.hidden widths must be positive");
  if (pool_size < 1) throw ConfigError("data.pool_size must be positive");
  if (!(pool_positive_fraction > 0.0 && pool_positive_fraction < 1.0))
    throw ConfigError("data.pool_positive_fraction must lie in (0, 1)");
  if (!(initial_lr > 0.0)) throw ConfigError("train.initial_lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train.momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("train.weight_decay must be nonnegative");
  if (lr_halving_patience < 1) throw ConfigError("train.lr_halving_patience must be >= 1");
  if (eval_every < 1) throw ConfigError("train.eval_every must be >= 1");
  if (validation_size < 1) throw ConfigError("train.validation_size must be >= 1");
  if (max_iterations < 0) throw ConfigError("train.max_iterations must be nonnegative");
  if (!(lr_floor > 0.0)) throw ConfigError("train.lr_floor must be positive");
  if (!(eval.iou_threshold > 0.0 && eval.iou_threshold <= 1.0))
    throw ConfigError("eval.iou_threshold must lie in (0, 1]");
}

ExperimentConfig ExperimentConfig::defaults(Representation r) {
  ExperimentConfig c;
  c.representation = r;
  if (r == Representation::Continuous) {
    c.initial_lr = 5e-5;
    c.plan = {128, 8, 120};
    c.world.classes = 1;
  }
  return c;
}

// ---------------------------------------------------------------------------
// Learning-rate schedule

PlateauSchedule::PlateauSchedule(double initial_lr, int patience)
    : lr_(initial_lr), patience_(patience), best_(std::numeric_limits<double>::infinity()) {
  if (!(initial_lr > 0.0)) throw ConfigError("initial learning rate must be positive");
  if (patience < 1) throw ConfigError("patience must be >= 1");
}

double PlateauSchedule::observe(double validation_loss) {
  if (validation_loss < best_) {
    best_ = validation_loss;
    stale_ = 0;
  } else if (++stale_ >= patience_) {
    lr_ /= 2.0;
    ++halvings_;
    stale_ = 0;
  }
  return lr_;
}

void write_trace_csv(std::ostream& out, const TrainingTrace& trace) {
  out << "iteration,train_loss,val_loss,lr\n";
  for (const auto& r : trace.records) {
    out << r.iteration << ',' << config::format_real(r.train_loss) << ','
        << config::format_real(r.validation_loss) << ',' << config::format_real(r.learning_rate)
        << '\n';
  }
}

// ---------------------------------------------------------------------------
// Heads and objectives

namespace {

// The reference classifier is a one-view discrete head; it never passes the
// public P >= 2 check, so the internal training path takes the head explicitly.
struct Head {
  Representation representation;
  int classes;
  int views;
};

Head head_of(const ExperimentConfig& c) { return {c.representation, c.classes(), c.views}; }
Head head_of(const Model& m) { return {m.representation, m.classes, m.views}; }

int bin_of(double azimuth, int views) {
  return views == 1 ? 1 : geometry::discretize(geometry::Azimuth(azimuth), views).index;
}

struct Objective {
  double value = 0.0;
  MatrixXd upstream;  // d value / d output, one column per sample
};

/// Batch objective of `head` on outputs Y for the given samples.
Objective batch_objective(const Head& head, const losses::LossHyper& hyper, const MatrixXd& y,
                          std::span<const data::Sample* const> samples) {
  const Index n = y.cols();
  Objective obj;
  obj.upstream = MatrixXd::Zero(y.rows(), n);
  if (n == 0) return obj;
  switch (head.representation) {
    case Representation::Discrete: {
      for (Index k = 0; k < n; ++k) {
        const auto& s = *samples[static_cast<std::size_t>(k)];
        const auto t = s.positive() ? losses::DiscreteTarget::object(head.classes, head.views,
                                                                     s.class_id,
                                                                     bin_of(s.azimuth, head.views))
                                    : losses::DiscreteTarget::background(head.classes, head.views);
        const auto l = losses::discrete_head_loss(y.col(k), t);
        obj.value += l.value;
        obj.upstream.col(k) = l.grad;
      }
      obj.value /= static_cast<double>(n);
      obj.upstream /= static_cast<double>(n);
      break;
    }
    case Representation::Continuous: {
      Index n_pos = 0;
      for (Index k = 0; k < n; ++k) n_pos += samples[static_cast<std::size_t>(k)]->positive();
      const Index n_neg = n - n_pos;
      double pos = 0.0, neg = 0.0;
      for (Index k = 0; k < n; ++k) {
        const auto& s = *samples[static_cast<std::size_t>(k)];
        const auto t = s.positive()
                           ? losses::CircleTarget::positive_at(geometry::Azimuth(s.azimuth))
                           : losses::CircleTarget::negative();
        const auto l = losses::circle_loss(y.col(k), t, hyper);
        if (s.positive()) {
          pos += l.value;
          obj.upstream.col(k) = l.grad / static_cast<double>(n_pos);
        } else {
          neg += l.value;
          obj.upstream.col(k) = hyper.k * l.grad / static_cast<double>(n_neg);
        }
      }
      if (n_pos) obj.value += pos / static_cast<double>(n_pos);
      if (n_neg) obj.value += hyper.k * neg / static_cast<double>(n_neg);
      break;
    }
    case Representation::JointA:
    case Representation::JointB1:
    case Representation::JointB2: {
      const auto variant = joint_variant(head.representation);
      const Index nc = head.classes + 1;
      const Index np = losses::pose_dimension(variant, head.classes);
      double class_sum = 0.0, pose_sum = 0.0;
      Index carriers = 0;
      std::vector<VectorXd> pose_grads(static_cast<std::size_t>(n));
      for (Index k = 0; k < n; ++k) {
        const auto& s = *samples[static_cast<std::size_t>(k)];
        const auto t = losses::JointTarget::make(
            variant, head.classes, s.class_id,
            geometry::Azimuth(s.positive() ? s.azimuth : 0.0));
        const auto l = losses::joint_loss(y.col(k).head(nc), y.col(k).segment(nc, np), t, hyper);
        class_sum += l.class_term;
        obj.upstream.col(k).head(nc) = l.grad_class / static_cast<double>(n);
        if (l.pose_active) {
          pose_sum += l.pose_term;
          ++carriers;
        }
        pose_grads[static_cast<std::size_t>(k)] = l.grad_pose;
      }
      obj.value = hyper.lambda * class_sum / static_cast<double>(n);
      if (carriers) {
        obj.value += pose_sum / static_cast<double>(carriers);
        for (Index k = 0; k < n; ++k)
          obj.upstream.col(k).segment(nc, np) =
              pose_grads[static_cast<std::size_t>(k)] / static_cast<double>(carriers);
      }
      break;
    }
  }
  return obj;
}

MatrixXd stack_features(std::span<const data::Sample* const> samples, Index dim) {
  MatrixXd x(dim, static_cast<Index>(samples.size()));
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (samples[k]->features.size() != dim)
      throw ShapeError("sample feature dimension does not match the network input");
    x.col(static_cast<Index>(k)) = samples[k]->features;
  }
  return x;
}

std::vector<const data::Sample*> pointers(const std::vector<data::Sample>& samples) {
  std::vector<const data::Sample*> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(&s);
  return out;
}

constexpr Index kEvalChunk = 2048;

double objective_over(const Head& head, const losses::LossHyper& hyper, const nnet::Network& net,
                      const std::vector<data::Sample>& samples) {
  // Continuous and joint objectives normalize per term, so evaluate in one pass.
  const auto ptrs = pointers(samples);
  const MatrixXd x = stack_features(ptrs, net.input_dim());
  return batch_objective(head, hyper, nnet::forward_batch(net, x), ptrs).value;
}

std::uint64_t init_seed(std::uint64_t seed, bool reference) {
  return data::derive_seed(seed, reference ? 0x2EF : 0x1217);
}

TrainResult train_head(const Head& head, const ExperimentConfig& config, const TrainingData& data,
                       const TrainOptions& options, bool reference) {
  if (data.train.empty()) throw ConfigError("training set is empty");
  const int dim = static_cast<int>(data.train.front().features.size());
  std::vector<int> widths{dim};
  widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
  widths.push_back(static_cast<int>(output_dim(head.representation, head.classes, head.views)));

  TrainResult result;
  result.model.representation = head.representation;
  result.model.classes = head.classes;
  result.model.views = head.views;
  result.model.net =
      nnet::Network::glorot(widths, nnet::Activation::Rectifier, init_seed(config.seed, reference));
  auto& net = result.model.net;
  auto& trace = result.trace;
  if (config.max_iterations == 0) return result;

  trace.initial_validation_loss = objective_over(head, config.hyper, net, data.validation);
  data::BatchSampler sampler(data.train, config.plan,
                             data::derive_seed(config.seed, reference ? 0xBA7C2 : 0xBA7C1));
  auto opt =
      nnet::OptimizerState::for_network(net, config.initial_lr, config.momentum, config.weight_decay);
  PlateauSchedule schedule(config.initial_lr, config.lr_halving_patience);

  nnet::ForwardCache cache;
  std::vector<const data::Sample*> batch(static_cast<std::size_t>(config.plan.batch_size));
  MatrixXd x(dim, config.plan.batch_size);
  double train_sum = 0.0;
  long train_count = 0;
  int evaluation = 0;
  for (long it = 1; it <= config.max_iterations; ++it) {
    const auto idx = sampler.next();
    batch.resize(idx.size());
    x.resize(dim, static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      batch[k] = &data.train[idx[k]];
      x.col(static_cast<Index>(k)) = batch[k]->features;
    }
    const MatrixXd y = nnet::forward_batch(net, x, &cache);
    const Objective obj = batch_objective(head, config.hyper, y, batch);
    if (!std::isfinite(obj.value)) {
      throw TrainingDiverged("training loss became non-finite at iteration " + std::to_string(it),
                             trace);
    }
    const nnet::Gradients g = nnet::backward(net, cache, x, obj.upstream);
    if (options.on_step) options.on_step(it, g);
    try {
      nnet::sgd_step(net, opt, g);
    } catch (const DivergedError& e) {
      throw TrainingDiverged(std::string(e.what()) + " at iteration " + std::to_string(it), trace);
    }
    train_sum += obj.value;
    ++train_count;

    if (it % config.eval_every == 0) {
      double v = objective_over(head, config.hyper, net, data.validation);
      if (options.validation_override) v = options.validation_override(evaluation, v);
      ++evaluation;
      const double lr = schedule.observe(v);
      opt.learning_rate = lr;
      trace.records.push_back({it, train_sum / static_cast<double>(train_count), v, lr});
      train_sum = 0.0;
      train_count = 0;
      if (lr < config.lr_floor) break;
    }
  }
  return result;
}

}  // namespace

// ---------------------------------------------------------------------------
// Models

Index output_dim(Representation r, int classes, int views) {
  switch (r) {
    case Representation::Discrete: return Index{classes} * views + 1;
    case Representation::Continuous: return 3;
    default: return classes + 1 + losses::pose_dimension(joint_variant(r), classes);
  }
}

void save_model(const std::filesystem::path& path, const Model& model) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write model " + path.string());
  out << "poselab-model 1\n"
      << "representation " << to_string(model.representation) << "\n"
      << "classes " << model.classes << "\n"
      << "views " << model.views << "\n"
      << "reference " << (model.reference ? 1 : 0) << "\n";
  nnet::write_network(out, model.net);
  if (model.reference) nnet::write_network(out, *model.reference);
  if (!out) throw Error("failed writing model " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read model " + path.string());
  std::string magic, key, rep;
  int version = 0, has_ref = 0;
  Model m;
  auto expect = [&](const char* want, std::size_t line) {
    if (!(in >> key) || key != want)
      throw ParseError(path.string() + ": expected '" + want + "'", line, 0);
  };
  if (!(in >> magic >> version) || magic != "poselab-model" || version != 1)
    throw ParseError(path.string() + ": not a poselab-model 1 file", 1, 0);
  expect("representation", 2);
  in >> rep;
  m.representation = parse_representation(rep);
  expect("classes", 3);
  in >> m.classes;
  expect("views", 4);
  in >> m.views;
  expect("reference", 5);
  in >> has_ref;
  if (!in) throw ParseError(path.string() + ": malformed model header", 5, 0);
  in >> std::ws;
  m.net = nnet::read_network(in);
  if (has_ref) {
    in >> std::ws;
    m.reference = nnet::read_network(in);
  }
  if (m.net.output_dim() != output_dim(m.representation, m.classes, m.views))
    throw ConfigError(path.string() + ": network output does not match the representation");
  return m;
}

// ---------------------------------------------------------------------------
// Training

TrainingData make_training_data(const ExperimentConfig& config) {
  const auto world = data::World::build(config.world);
  data::SampleOptions opts;
  opts.stream = data::derive_seed(config.seed, 0x9001);
  auto pool = data::generate_samples(world, config.pool_size, config.pool_positive_fraction, opts);
  const double ratio =
      static_cast<double>(config.plan.positives) / static_cast<double>(config.plan.batch_size);
  auto split = data::split_validation(std::move(pool), config.validation_size, ratio,
                                      data::derive_seed(config.seed, 0x5917));
  TrainingData out;
  out.train = config.flip_augmentation ? data::with_flips(world, std::move(split.train))
                                       : std::move(split.train);
  out.validation = std::move(split.validation);
  return out;
}

TrainResult train_reference_classifier(const ExperimentConfig& config, const TrainingData& data) {
  config.validate();
  return train_head({Representation::Discrete, config.classes(), 1}, config, data, {}, true);
}

TrainResult train(const ExperimentConfig& config, const TrainingData& data,
                  const TrainOptions& options) {
  config.validate();
  TrainResult r = train_head(head_of(config), config, data, options, false);
  if (is_joint(config.representation) && config.hyper.lambda == 0.0) {
    r.model.reference = options.reference ? *options.reference
                                          : train_reference_classifier(config, data).model.net;
  }
  return r;
}

double validation_loss(const Model& model, const ExperimentConfig& config,
                       const std::vector<data::Sample>& samples) {
  return objective_over(head_of(model), config.hyper, model.net, samples);
}

// ---------------------------------------------------------------------------
// Prediction

int Prediction::top_class() const {
  if (scores.size() < 2) throw ShapeError("prediction has no object class");
  Index best = 1;
  for (Index c = 2; c < scores.size(); ++c)
    if (scores[c] > scores[best]) best = c;
  return static_cast<int>(best);
}

Prediction interpret_output(Representation r, int classes, int views,
                            const Eigen::Ref<const VectorXd>& y, const VectorXd* class_scores) {
  const Index want = output_dim(r, classes, views);
  if (y.size() != want) {
    throw ConfigError("head mismatch: " + std::string(to_string(r)) + " expects " +
                      std::to_string(want) + " outputs, got " + std::to_string(y.size()));
  }
  Prediction p;
  p.scores = VectorXd::Zero(classes + 1);
  p.azimuths.assign(static_cast<std::size_t>(classes) + 1, 0.0);
  switch (r) {
    case Representation::Discrete: {
      const VectorXd prob = losses::softmax(y);
      p.scores[0] = prob[0];
      for (int c = 1; c <= classes; ++c) {
        const auto block = prob.segment(losses::discrete_index(views, c, 1), views);
        Index j = 0;
        block.maxCoeff(&j);
        p.scores[c] = block.sum();
        p.azimuths[static_cast<std::size_t>(c)] =
            views == 1 ? 0.0
                       : geometry::bin_center({static_cast<int>(j) + 1, views}).radians();
      }
      break;
    }
    case Representation::Continuous: {
      const double d = geometry::distance_to_circle(y.head<3>());
      p.scores[0] = d;
      p.scores[1] = -d;
      p.azimuths[1] = geometry::angle_from_feature(y, {0, 1}).radians();
      break;
    }
    default: {
      const bool shared = r == Representation::JointA;
      p.scores = VectorXd(losses::softmax(y.head(classes + 1)));
      for (int c = 1; c <= classes; ++c) {
        const Index at = classes + 1 + (shared ? 0 : 2 * Index{c - 1});
        p.azimuths[static_cast<std::size_t>(c)] =
            geometry::angle_from_feature(y, {at, at + 1}).radians();
      }
      break;
    }
  }
  if (class_scores) {
    if (!is_joint(r)) throw ConfigError("external class scores only apply to joint heads");
    if (class_scores->size() != classes + 1)
      throw ShapeError("class scores must have N + 1 entries");
    p.scores = *class_scores;
  }
  return p;
}

Prediction predict(const Model& model, const Eigen::Ref<const VectorXd>& x) {
  const VectorXd y = nnet::forward(model.net, x);
  if (model.reference) {
    const VectorXd s = losses::softmax(nnet::forward(*model.reference, x));
    return interpret_output(model.representation, model.classes, model.views, y, &s);
  }
  return interpret_output(model.representation, model.classes, model.views, y);
}

std::vector<Prediction> predict_batch(const Model& model, const MatrixXd& x) {
  std::vector<Prediction> out;
  out.reserve(static_cast<std::size_t>(x.cols()));
  for (Index start = 0; start < x.cols(); start += kEvalChunk) {
    const Index n = std::min(kEvalChunk, x.cols() - start);
    const MatrixXd y = nnet::forward_batch(model.net, x.middleCols(start, n));
    MatrixXd ref;
    if (model.reference) ref = nnet::forward_batch(*model.reference, x.middleCols(start, n));
    for (Index k = 0; k < n; ++k) {
      if (model.reference) {
        const VectorXd s = losses::softmax(ref.col(k));
        out.push_back(
            interpret_output(model.representation, model.classes, model.views, y.col(k), &s));
      } else {
        out.push_back(interpret_output(model.representation, model.classes, model.views, y.col(k)));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

std::vector<metrics::Detection> to_detections(const std::vector<Prediction>& preds,
                                              const data::DetectionScenario& scenario,
                                              int classes) {
  std::vector<metrics::Detection> dets;
  dets.reserve(preds.size() * static_cast<std::size_t>(classes));
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto& p = preds[i];
    if (p.scores.size() != classes + 1)
      throw ShapeError("prediction has " + std::to_string(p.scores.size()) + " scores, expected " +
                       std::to_string(classes + 1));
    for (int c = 1; c <= classes; ++c) {
      dets.push_back({scenario.proposals[i].image_id, c, p.scores[c], scenario.proposals[i].box,
                      p.azimuths.at(static_cast<std::size_t>(c))});
    }
  }
  return dets;
}

}  // namespace

std::vector<metrics::Detection> detect(const Model& model,
                                       const data::DetectionScenario& scenario) {
  if (scenario.proposals.empty()) return {};
  MatrixXd x(model.net.input_dim(), static_cast<Index>(scenario.proposals.size()));
  for (std::size_t i = 0; i < scenario.proposals.size(); ++i) {
    if (scenario.proposals[i].features.size() != x.rows())
      throw ShapeError("proposal feature dimension does not match the network input");
    x.col(static_cast<Index>(i)) = scenario.proposals[i].features;
  }
  return to_detections(predict_batch(model, x), scenario, model.classes);
}

metrics::MetricsTable evaluate(const Model& model, const ExperimentConfig& config,
                               const data::DetectionScenario& scenario) {
  const auto dets = detect(model, scenario);
  return metrics::evaluate_detections(dets, scenario.ground_truth, model.classes,
                                      config.eval.iou_threshold, config.eval.criterion);
}

metrics::MetricsTable evaluate_with(const Scorer& scorer, const ExperimentConfig& config,
                                    const data::DetectionScenario& scenario) {
  std::vector<Prediction> preds;
  preds.reserve(scenario.proposals.size());
  for (const auto& p : scenario.proposals) preds.push_back(scorer(p));
  const auto dets = to_detections(preds, scenario, config.classes());
  return metrics::evaluate_detections(dets, scenario.ground_truth, config.classes(),
                                      config.eval.iou_threshold, config.eval.criterion);
}

data::DetectionScenario make_scenario(const ExperimentConfig& config) {
  return data::generate_detection_scenario(data::World::build(config.world),
                                           config.eval.scenario);
}

// ---------------------------------------------------------------------------
// Sweeps

std::vector<std::string> sweep_axes() {
  auto axes = config::axis_aliases();
  for (const auto& k : config::numeric_keys()) axes.push_back(k);
  return axes;
}

SweepReport sweep(const std::string& axis, const std::vector<double>& values,
                  const ExperimentConfig& base, int jobs) {
  const std::string key = config::key_for_axis(axis);
  if (key.empty()) {
    std::string valid;
    for (const auto& a : sweep_axes()) valid += (valid.empty() ? "" : ", ") + a;
    throw ConfigError("unknown sweep axis '" + axis + "'; valid axes: " + valid);
  }
  std::vector<ExperimentConfig> configs;
  for (double v : values) {
    ExperimentConfig c = base;
    config::apply(c, key, config::format_real(v));
    c.validate();
    configs.push_back(std::move(c));
  }
  auto run_one = [](const ExperimentConfig& c) {
    const auto data = make_training_data(c);
    const auto result = train(c, data);
    return evaluate(result.model, c, make_scenario(c));
  };
  SweepReport report{axis, {}};
  report.points.resize(values.size());
  const std::size_t width = static_cast<std::size_t>(std::max(1, jobs));
  for (std::size_t start = 0; start < configs.size(); start += width) {
    const std::size_t end = std::min(configs.size(), start + width);
    std::vector<std::future<metrics::MetricsTable>> pending;
    for (std::size_t i = start; i < end; ++i)
      pending.push_back(std::async(width > 1 ? std::launch::async : std::launch::deferred, run_one,
                                   std::cref(configs[i])));
    for (std::size_t i = start; i < end; ++i)
      report.points[i] = {values[i], pending[i - start].get()};
  }
  return report;
}

void write_sweep_csv(std::ostream& out, const SweepReport& report) {
  out << "metric";
  for (const auto& p : report.points) out << ',' << report.axis << '=' << config::format_real(p.value);
  out << '\n';
  out << "AP";
  for (const auto& p : report.points) out << ',' << metrics::format_metric(p.metrics.mean_ap);
  out << '\n';
  for (std::size_t v = 0; v < metrics::kReportViews.size(); ++v) {
    out << "AVP@" << metrics::kReportViews[v];
    for (const auto& p : report.points) out << ',' << metrics::format_metric(p.metrics.mean_avp[v]);
    out << '\n';
  }
}

void write_sweep_svg(std::ostream& out, const SweepReport& report) {
  std::vector<svg::Series> series(1 + metrics::kReportViews.size());
  series[0].label = "AP";
  for (std::size_t v = 0; v < metrics::kReportViews.size(); ++v)
    series[v + 1].label = "AVP@" + std::to_string(metrics::kReportViews[v]);
  for (const auto& p : report.points) {
    for (auto& s : series) s.x.push_back(p.value);
    series[0].y.push_back(p.metrics.mean_ap);
    for (std::size_t v = 0; v < metrics::kReportViews.size(); ++v)
      series[v + 1].y.push_back(p.metrics.mean_avp[v]);
  }
  svg::write_line_plot(out, {"mean metrics vs " + report.axis, report.axis, "metric", false},
                       series);
}

}  // namespace poselab::harness
