#pragma once

// Small fully-connected network with analytic backpropagation, SGD with
// momentum and a finite-difference gradient checker.
//
// Batches are column-major: each column of an input matrix is one sample.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace poselab::nnet {

enum class Activation { Identity, Rectifier };

struct Layer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
  Activation activation = Activation::Identity;

  Eigen::Index in() const { return weights.cols(); }
  Eigen::Index out() const { return weights.rows(); }
};

class Network {
 public:
  Network() = default;
  explicit Network(std::vector<Layer> layers);

  /// widths = {input, hidden..., output}. Hidden layers use `hidden`, the last
  /// layer is affine. Weights ~ U[-s, s] with s = sqrt(6 / (fan_in + fan_out)),
  /// biases zero.
  static Network glorot(std::span<const int> widths, Activation hidden, std::uint64_t seed);

  Eigen::Index input_dim() const;
  Eigen::Index output_dim() const;
  const std::vector<Layer>& layers() const { return layers_; }
  std::size_t parameter_count() const;

  /// Flat parameter order: layer by layer, weights row-major then bias.
  double parameter(std::size_t index) const;
  void set_parameter(std::size_t index, double value);

  /// Bumped on every mutation; forward caches remember the value they saw.
  std::uint64_t version() const noexcept { return version_; }

  /// Mutable access for optimizers; invalidates outstanding caches.
  std::vector<Layer>& mutable_layers();

  friend bool operator==(const Network& a, const Network& b);

 private:
  std::vector<Layer> layers_;
  std::uint64_t version_ = 0;
};

struct ForwardCache {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> pre_activations;  // per layer
  std::vector<Eigen::MatrixXd> outputs;          // per layer, post-activation
  std::uint64_t network_version = 0;
  bool valid = false;
};

struct LayerGradient {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

struct Gradients {
  std::vector<LayerGradient> layers;
  Eigen::MatrixXd input;  // d/dx, one column per sample

  static Gradients zeros_like(const Network& net);
  std::size_t size() const;
  double flat(std::size_t index) const;
  double& flat(std::size_t index);
};

Eigen::VectorXd forward(const Network& net, const Eigen::Ref<const Eigen::VectorXd>& x);
Eigen::MatrixXd forward_batch(const Network& net, const Eigen::Ref<const Eigen::MatrixXd>& x,
                        ForwardCache* cache = nullptr);

/// Gradients of sum_columns(upstream . y) w.r.t. parameters and input.
/// Throws StaleActivationError if `cache` was not produced by forward on this
/// network version and this input.
Gradients backward(const Network& net, const ForwardCache& cache,
                   const Eigen::Ref<const Eigen::MatrixXd>& x,
                   const Eigen::Ref<const Eigen::MatrixXd>& upstream);

struct OptimizerState {
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  Gradients velocity;

  static OptimizerState for_network(const Network& net, double learning_rate, double momentum,
                                    double weight_decay);
};

/// v <- momentum * v - lr * (g + wd * w);  w <- w + v.
/// Throws DivergedError (with the flat parameter index) on a non-finite gradient
/// before touching any weight.
void sgd_step(Network& net, OptimizerState& state, const Gradients& grads);

/// Loss of one network output: value and gradient w.r.t. that output.
struct LossEval {
  double value = 0.0;
  Eigen::VectorXd grad;
};
using LossFn = std::function<LossEval(const Eigen::VectorXd& y)>;

struct GradCheckOptions {
  double step = 1e-4;          // relative to max(1, |w|); fourth-order central stencil
  double abs_floor = 1e-8;     // epsilon in the relative-error denominator ...
  double rel_floor = 1e-6;     // ... is max(abs_floor, rel_floor * max(1, |loss|))
  std::size_t max_parameters = 0;  // 0 = all, otherwise a random subset (at least 200)
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_parameter_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;  // coordinates whose stencil crossed a rectifier kink
};

GradCheckReport grad_check(const Network& net, const LossFn& loss,
                           const Eigen::Ref<const Eigen::VectorXd>& x,
                           const GradCheckOptions& options = {});

/// Same comparison against caller-supplied analytic parameter gradients.
GradCheckReport grad_check_against(const Network& net, const LossFn& loss,
                                   const Eigen::Ref<const Eigen::VectorXd>& x,
                                   const Gradients& analytic,
                                   const GradCheckOptions& options = {});

// Checkpoint format (text, version 1):
//   poselab-network 1
//   layers <L>
//   layer <in> <out> <identity|rectifier>
//   <out lines of `in` weights, row-major>
//   <one line of `out` biases>
//   ... repeated per layer
// Reals use 17 significant digits so a save/load round trip is exact.
void write_network(std::ostream& out, const Network& net);
Network read_network(std::istream& in);
void save_network(const std::filesystem::path& path, const Network& net);
Network load_network(const std::filesystem::path& path);

}  // namespace poselab::nnet
