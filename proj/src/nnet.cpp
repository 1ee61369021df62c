#include "poselab/nnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "poselab/error.hpp"

namespace poselab::nnet {

namespace {

std::string dims(Eigen::Index rows, Eigen::Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

void apply_activation(Activation act, Eigen::MatrixXd& m) {
  if (act == Activation::Rectifier) m = m.cwiseMax(0.0);
}

// Locate flat parameter `index`: (layer, offset within layer, is_bias).
struct ParamLocation {
  std::size_t layer;
  Eigen::Index row;
  Eigen::Index col;  // -1 for bias
};

template <typename LayerLike>
ParamLocation locate(const std::vector<LayerLike>& layers, std::size_t index) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& w = layers[l].weights;
    const auto nw = static_cast<std::size_t>(w.size());
    if (index < nw) {
      const auto cols = static_cast<std::size_t>(w.cols());
      return {l, static_cast<Eigen::Index>(index / cols), static_cast<Eigen::Index>(index % cols)};
    }
    index -= nw;
    const auto nb = static_cast<std::size_t>(layers[l].bias.size());
    if (index < nb) return {l, static_cast<Eigen::Index>(index), -1};
    index -= nb;
  }
  throw ShapeError("parameter index out of range");
}

const char* activation_name(Activation a) {
  return a == Activation::Rectifier ? "rectifier" : "identity";
}

}  // namespace

Network::Network(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ShapeError("network needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& layer = layers_[i];
    if (layer.bias.size() != layer.out()) {
      throw ShapeError("layer " + std::to_string(i) + ": bias size " +
                       std::to_string(layer.bias.size()) + " does not match " +
                       std::to_string(layer.out()) + " outputs");
    }
    if (i + 1 < layers_.size() && layers_[i + 1].in() != layer.out()) {
      throw ShapeError("layer " + std::to_string(i + 1) + " expects " +
                       std::to_string(layers_[i + 1].in()) + " inputs, previous layer emits " +
                       std::to_string(layer.out()));
    }
  }
}

Network Network::glorot(std::span<const int> widths, Activation hidden, std::uint64_t seed) {
  if (widths.size() < 2) throw ShapeError("glorot: need at least input and output widths");
  std::mt19937_64 rng(seed);
  std::vector<Layer> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const int fan_in = widths[i];
    const int fan_out = widths[i + 1];
    if (fan_in <= 0 || fan_out <= 0) throw ShapeError("glorot: widths must be positive");
    const double s = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-s, s);
    Layer layer;
    layer.weights.resize(fan_out, fan_in);
    for (Eigen::Index r = 0; r < fan_out; ++r)
      for (Eigen::Index c = 0; c < fan_in; ++c) layer.weights(r, c) = u(rng);
    layer.bias = Eigen::VectorXd::Zero(fan_out);
    layer.activation = (i + 2 < widths.size()) ? hidden : Activation::Identity;
    layers.push_back(std::move(layer));
  }
  return Network(std::move(layers));
}

Eigen::Index Network::input_dim() const { return layers_.empty() ? 0 : layers_.front().in(); }
Eigen::Index Network::output_dim() const { return layers_.empty() ? 0 : layers_.back().out(); }

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

double Network::parameter(std::size_t index) const {
  const auto loc = locate(layers_, index);
  const auto& l = layers_[loc.layer];
  return loc.col < 0 ? l.bias[loc.row] : l.weights(loc.row, loc.col);
}

void Network::set_parameter(std::size_t index, double value) {
  const auto loc = locate(layers_, index);
  auto& l = mutable_layers()[loc.layer];
  if (loc.col < 0)
    l.bias[loc.row] = value;
  else
    l.weights(loc.row, loc.col) = value;
}

std::vector<Layer>& Network::mutable_layers() {
  ++version_;
  return layers_;
}

bool operator==(const Network& a, const Network& b) {
  if (a.layers_.size() != b.layers_.size()) return false;
  for (std::size_t i = 0; i < a.layers_.size(); ++i) {
    const auto& x = a.layers_[i];
    const auto& y = b.layers_[i];
    if (x.activation != y.activation || x.weights.rows() != y.weights.rows() ||
        x.weights.cols() != y.weights.cols() || x.weights != y.weights || x.bias != y.bias)
      return false;
  }
  return true;
}

Gradients Gradients::zeros_like(const Network& net) {
  Gradients g;
  for (const auto& l : net.layers()) {
    g.layers.push_back({Eigen::MatrixXd::Zero(l.out(), l.in()), Eigen::VectorXd::Zero(l.out())});
  }
  return g;
}

std::size_t Gradients::size() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

double Gradients::flat(std::size_t index) const {
  const auto loc = locate(layers, index);
  const auto& l = layers[loc.layer];
  return loc.col < 0 ? l.bias[loc.row] : l.weights(loc.row, loc.col);
}

double& Gradients::flat(std::size_t index) {
  const auto loc = locate(layers, index);
  auto& l = layers[loc.layer];
  return loc.col < 0 ? l.bias[loc.row] : l.weights(loc.row, loc.col);
}

Eigen::VectorXd forward(const Network& net, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return forward_batch(net, Eigen::MatrixXd(x), nullptr).col(0);
}

Eigen::MatrixXd forward_batch(const Network& net, const Eigen::Ref<const Eigen::MatrixXd>& x,
                        ForwardCache* cache) {
  if (net.layers().empty()) throw ShapeError("forward: empty network");
  if (x.rows() != net.input_dim()) {
    throw ShapeError("forward: input has " + std::to_string(x.rows()) + " rows, network expects " +
                     std::to_string(net.input_dim()));
  }
  if (cache) {
    cache->input = x;
    cache->pre_activations.clear();
    cache->outputs.clear();
    cache->valid = false;
  }
  Eigen::MatrixXd a = x;
  for (const auto& layer : net.layers()) {
    Eigen::MatrixXd z = layer.weights * a;
    z.colwise() += layer.bias;
    if (cache) cache->pre_activations.push_back(z);
    apply_activation(layer.activation, z);
    if (cache) cache->outputs.push_back(z);
    a = std::move(z);
  }
  if (cache) {
    cache->network_version = net.version();
    cache->valid = true;
  }
  return a;
}

Gradients backward(const Network& net, const ForwardCache& cache,
                   const Eigen::Ref<const Eigen::MatrixXd>& x,
                   const Eigen::Ref<const Eigen::MatrixXd>& upstream) {
  if (!cache.valid || cache.network_version != net.version() ||
      cache.pre_activations.size() != net.layers().size() || cache.input.rows() != x.rows() ||
      cache.input.cols() != x.cols() || cache.input != x) {
    throw StaleActivationError("backward: no forward pass recorded for this input and weights");
  }
  if (upstream.rows() != net.output_dim() || upstream.cols() != x.cols()) {
    throw ShapeError("backward: upstream gradient is " + dims(upstream.rows(), upstream.cols()) +
                     ", expected " + dims(net.output_dim(), x.cols()));
  }
  const auto& layers = net.layers();
  Gradients g;
  g.layers.resize(layers.size());
  Eigen::MatrixXd delta = upstream;
  for (std::size_t i = layers.size(); i-- > 0;) {
    const auto& layer = layers[i];
    if (layer.activation == Activation::Rectifier) {
      delta = delta.cwiseProduct((cache.pre_activations[i].array() > 0.0).cast<double>().matrix());
    }
    const Eigen::MatrixXd& below = (i == 0) ? cache.input : cache.outputs[i - 1];
    g.layers[i].weights.noalias() = delta * below.transpose();
    g.layers[i].bias = delta.rowwise().sum();
    Eigen::MatrixXd next = layer.weights.transpose() * delta;
    delta = std::move(next);
  }
  g.input = std::move(delta);
  return g;
}

OptimizerState OptimizerState::for_network(const Network& net, double learning_rate,
                                           double momentum, double weight_decay) {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be nonnegative");
  return {learning_rate, momentum, weight_decay, Gradients::zeros_like(net)};
}

void sgd_step(Network& net, OptimizerState& state, const Gradients& grads) {
  const auto& layers = net.layers();
  if (grads.layers.size() != layers.size() || state.velocity.layers.size() != layers.size()) {
    throw ShapeError("sgd_step: gradient/velocity layer count does not match network");
  }
  std::size_t offset = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& g = grads.layers[l];
    const auto& v = state.velocity.layers[l];
    if (g.weights.rows() != layers[l].out() || g.weights.cols() != layers[l].in() ||
        g.bias.size() != layers[l].out() || v.weights.rows() != layers[l].out() ||
        v.weights.cols() != layers[l].in() || v.bias.size() != layers[l].out()) {
      throw ShapeError("sgd_step: layer " + std::to_string(l) + " gradient shape mismatch");
    }
    for (Eigen::Index r = 0; r < g.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < g.weights.cols(); ++c)
        if (!std::isfinite(g.weights(r, c))) {
          throw DivergedError("non-finite gradient", offset + static_cast<std::size_t>(
                                                                  r * g.weights.cols() + c));
        }
    offset += static_cast<std::size_t>(g.weights.size());
    for (Eigen::Index r = 0; r < g.bias.size(); ++r)
      if (!std::isfinite(g.bias[r])) {
        throw DivergedError("non-finite gradient", offset + static_cast<std::size_t>(r));
      }
    offset += static_cast<std::size_t>(g.bias.size());
  }

  auto& mut = net.mutable_layers();
  for (std::size_t l = 0; l < mut.size(); ++l) {
    auto& w = mut[l];
    auto& v = state.velocity.layers[l];
    const auto& g = grads.layers[l];
    v.weights = state.momentum * v.weights -
                state.learning_rate * (g.weights + state.weight_decay * w.weights);
    v.bias = state.momentum * v.bias - state.learning_rate * (g.bias + state.weight_decay * w.bias);
    w.weights += v.weights;
    w.bias += v.bias;
  }
}

namespace {

std::vector<Eigen::ArrayXX<bool>> rectifier_pattern(const Network& net, const Eigen::VectorXd& x) {
  ForwardCache cache;
  forward_batch(net, Eigen::MatrixXd(x), &cache);
  std::vector<Eigen::ArrayXX<bool>> masks;
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    if (net.layers()[i].activation == Activation::Rectifier)
      masks.push_back(cache.pre_activations[i].array() > 0.0);
  }
  return masks;
}

bool same_pattern(const std::vector<Eigen::ArrayXX<bool>>& a,
                  const std::vector<Eigen::ArrayXX<bool>>& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if ((a[i] != b[i]).any()) return false;
  return true;
}

}  // namespace

GradCheckReport grad_check_against(const Network& net, const LossFn& loss,
                                   const Eigen::Ref<const Eigen::VectorXd>& x,
                                   const Gradients& analytic, const GradCheckOptions& options) {
  const Eigen::VectorXd input = x;
  const std::size_t count = net.parameter_count();
  if (analytic.size() != count) throw ShapeError("grad_check: analytic gradient size mismatch");

  std::vector<std::size_t> indices(count);
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  if (options.max_parameters > 0 && options.max_parameters < count) {
    const std::size_t take = std::min(count, std::max<std::size_t>(200, options.max_parameters));
    std::mt19937_64 rng(options.seed);
    std::shuffle(indices.begin(), indices.end(), rng);
    indices.resize(take);
    std::sort(indices.begin(), indices.end());
  }

  const double base_loss = loss(forward(net, input)).value;
  const double floor =
      std::max(options.abs_floor, options.rel_floor * std::max(1.0, std::abs(base_loss)));
  const auto base_pattern = rectifier_pattern(net, input);

  GradCheckReport report;
  Network probe = net;
  for (const std::size_t idx : indices) {
    const double w0 = net.parameter(idx);
    const double h = options.step * std::max(1.0, std::abs(w0));
    double f[4];
    const double offsets[4] = {-2.0, -1.0, 1.0, 2.0};
    bool kink = false;
    for (int s = 0; s < 4; ++s) {
      probe.set_parameter(idx, w0 + offsets[s] * h);
      if (!same_pattern(base_pattern, rectifier_pattern(probe, input))) {
        kink = true;
        break;
      }
      f[s] = loss(forward(probe, input)).value;
    }
    probe.set_parameter(idx, w0);
    if (kink) {
      ++report.skipped_kinks;
      continue;
    }
    const double numeric = (f[0] - 8.0 * f[1] + 8.0 * f[2] - f[3]) / (12.0 * h);
    const double a = analytic.flat(idx);
    const double denom = std::max({std::abs(a), std::abs(numeric), floor});
    const double err = std::abs(a - numeric) / denom;
    ++report.checked;
    if (report.checked == 1 || err > report.max_relative_error) {
      report.max_relative_error = err;
      report.worst_parameter_index = idx;
      report.analytic = a;
      report.numeric = numeric;
    }
  }
  return report;
}

GradCheckReport grad_check(const Network& net, const LossFn& loss,
                           const Eigen::Ref<const Eigen::VectorXd>& x,
                           const GradCheckOptions& options) {
  const Eigen::MatrixXd input = x;
  ForwardCache cache;
  const Eigen::MatrixXd y = forward_batch(net, input, &cache);
  const LossEval eval = loss(y.col(0));
  if (eval.grad.size() != y.rows()) throw ShapeError("grad_check: loss gradient size mismatch");
  const Gradients g = backward(net, cache, input, Eigen::MatrixXd(eval.grad));
  return grad_check_against(net, loss, x, g, options);
}

void write_network(std::ostream& out, const Network& net) {
  out << "poselab-network 1\n";
  out << "layers " << net.layers().size() << "\n";
  out << std::setprecision(17);
  for (const auto& layer : net.layers()) {
    out << "layer " << layer.in() << " " << layer.out() << " "
        << activation_name(layer.activation) << "\n";
    for (Eigen::Index r = 0; r < layer.out(); ++r) {
      for (Eigen::Index c = 0; c < layer.in(); ++c) out << (c ? " " : "") << layer.weights(r, c);
      out << "\n";
    }
    for (Eigen::Index r = 0; r < layer.out(); ++r) out << (r ? " " : "") << layer.bias[r];
    out << "\n";
  }
}

namespace {

struct LineReader {
  std::istream& in;
  std::size_t line_no = 0;

  std::istringstream next(const char* what) {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#') continue;
      return std::istringstream(line);
    }
    throw ParseError(std::string("network checkpoint: unexpected end of file, expected ") + what,
                     line_no, 0);
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("network checkpoint line " + std::to_string(line_no) + ": " + msg, line_no, 0);
  }
};

}  // namespace

Network read_network(std::istream& in) {
  LineReader reader{in};
  {
    auto s = reader.next("header");
    std::string magic;
    int version = 0;
    if (!(s >> magic >> version) || magic != "poselab-network") reader.fail("bad header");
    if (version != 1) reader.fail("unsupported version " + std::to_string(version));
  }
  std::size_t n_layers = 0;
  {
    auto s = reader.next("layer count");
    std::string key;
    if (!(s >> key >> n_layers) || key != "layers" || n_layers == 0) reader.fail("bad layer count");
  }
  std::vector<Layer> layers;
  for (std::size_t l = 0; l < n_layers; ++l) {
    auto s = reader.next("layer header");
    std::string key, act;
    Eigen::Index in_dim = 0, out_dim = 0;
    if (!(s >> key >> in_dim >> out_dim >> act) || key != "layer" || in_dim <= 0 || out_dim <= 0)
      reader.fail("bad layer header");
    Layer layer;
    if (act == "rectifier")
      layer.activation = Activation::Rectifier;
    else if (act == "identity")
      layer.activation = Activation::Identity;
    else
      reader.fail("unknown activation '" + act + "'");
    layer.weights.resize(out_dim, in_dim);
    for (Eigen::Index r = 0; r < out_dim; ++r) {
      auto row = reader.next("weight row");
      for (Eigen::Index c = 0; c < in_dim; ++c)
        if (!(row >> layer.weights(r, c))) reader.fail("short weight row");
    }
    layer.bias.resize(out_dim);
    auto brow = reader.next("bias row");
    for (Eigen::Index r = 0; r < out_dim; ++r)
      if (!(brow >> layer.bias[r])) reader.fail("short bias row");
    layers.push_back(std::move(layer));
  }
  try {
    return Network(std::move(layers));
  } catch (const ShapeError& e) {
    reader.fail(e.what());
  }
}

void save_network(const std::filesystem::path& path, const Network& net) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_network(out, net);
}

Network load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  return read_network(in);
}

}  // namespace poselab::nnet
