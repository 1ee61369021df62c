#include "poselab/data.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "poselab/error.hpp"
#include "poselab/geometry.hpp"

namespace poselab::data {

namespace {

constexpr double kImageSize = 1000.0;
constexpr int kGridCells = 3;

Eigen::VectorXd gaussian_vector(std::mt19937_64& rng, int dim, double sigma) {
  std::normal_distribution<double> n(0.0, sigma);
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = n(rng);
  return v;
}

// Unit vector orthogonal to every vector in `basis` (assumed orthonormal).
Eigen::VectorXd orthogonal_unit(std::mt19937_64& rng, int dim,
                                const std::vector<Eigen::VectorXd>& basis) {
  for (;;) {
    Eigen::VectorXd v = gaussian_vector(rng, dim, 1.0);
    for (const auto& b : basis) v -= v.dot(b) * b;
    const double n = v.norm();
    if (n > 1e-6) return v / n;
  }
}

}  // namespace

namespace {

Eigen::VectorXd draw_negative(const World& world, std::mt19937_64& rng) {
  const auto& p = world.params();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < p.hard_negative_fraction) {
    const int c = std::uniform_int_distribution<int>(1, p.classes)(rng);
    const double phi = geometry::kTwoPi * unit(rng);
    const double g = p.hard_negative_gap;
    const double scale =
        unit(rng) < 0.5 ? (1.0 - g) * std::sqrt(unit(rng)) : 1.0 + g + (1.0 - g) * unit(rng);
    return world.off_ring(c, scale, phi) + gaussian_vector(rng, p.feature_dim, p.noise_sigma);
  }
  return gaussian_vector(rng, p.feature_dim, p.background_spread);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void WorldParams::validate() const {
  if (classes < 1) throw ConfigError("world.classes must be at least 1");
  if (feature_dim < 3) throw ConfigError("world.feature_dim must be at least 3");
  if (!(mean_norm > 0.0)) throw ConfigError("world.mean_norm must be positive");
  if (!(signal_radius > 0.0)) throw ConfigError("world.signal_radius must be positive");
  if (!(noise_sigma >= 0.0)) throw ConfigError("world.noise_sigma must be nonnegative");
  if (!(background_spread > 0.0)) throw ConfigError("world.background_spread must be positive");
  if (!(mirror_label_noise >= 0.0 && mirror_label_noise < 0.5))
    throw ConfigError("world.mirror_label_noise must lie in [0, 0.5)");
  if (!(hard_negative_fraction >= 0.0 && hard_negative_fraction <= 1.0))
    throw ConfigError("world.hard_negative_fraction must lie in [0, 1]");
  if (!(hard_negative_gap > 0.0 && hard_negative_gap < 1.0))
    throw ConfigError("world.hard_negative_gap must lie in (0, 1)");
}

World World::build(const WorldParams& params) {
  params.validate();
  World w;
  w.params_ = params;
  std::mt19937_64 rng(derive_seed(params.seed, 0x3017));
  const double min_separation = std::max(4.0 * params.noise_sigma, params.mean_norm);
  for (int c = 0; c < params.classes; ++c) {
    ClassModel m;
    for (int attempt = 0;; ++attempt) {
      Eigen::VectorXd dir = gaussian_vector(rng, params.feature_dim, 1.0);
      m.mean = params.mean_norm * dir / dir.norm();
      bool ok = true;
      for (const auto& other : w.classes_)
        if ((other.mean - m.mean).norm() <= min_separation) ok = false;
      if (ok) break;
      if (attempt > 10000) throw ConfigError("world: cannot place separated class means");
    }
    const Eigen::VectorXd mean_dir = m.mean.normalized();
    m.cos_axis = orthogonal_unit(rng, params.feature_dim, {mean_dir});
    m.sin_axis = orthogonal_unit(rng, params.feature_dim, {mean_dir, m.cos_axis});
    m.radius = params.signal_radius;
    w.classes_.push_back(std::move(m));
  }
  return w;
}

Eigen::VectorXd World::appearance(int class_id, double theta) const {
  const auto& m = model(class_id);
  return m.mean + m.radius * (std::cos(theta) * m.cos_axis + std::sin(theta) * m.sin_axis);
}

Eigen::VectorXd World::off_ring(int class_id, double radial_scale, double phi) const {
  const auto& m = model(class_id);
  return m.mean +
         radial_scale * m.radius * (std::cos(phi) * m.cos_axis + std::sin(phi) * m.sin_axis);
}

Eigen::VectorXd World::mirror(int class_id, const Eigen::VectorXd& x) const {
  const auto& m = model(class_id);
  return x - 2.0 * (x - m.mean).dot(m.sin_axis) * m.sin_axis;
}

Eigen::Vector2d World::signal_coordinates(int class_id, const Eigen::VectorXd& x) const {
  const auto& m = model(class_id);
  const Eigen::VectorXd rel = x - m.mean;
  return {rel.dot(m.cos_axis) / m.radius, rel.dot(m.sin_axis) / m.radius};
}

bool same_sample(const Sample& a, const Sample& b) {
  if (a.class_id != b.class_id) return false;
  const bool an = std::isnan(a.azimuth), bn = std::isnan(b.azimuth);
  if (an != bn || (!an && a.azimuth != b.azimuth)) return false;
  return a.features.size() == b.features.size() && a.features == b.features;
}

std::vector<Sample> generate_samples(const World& world, long n, double positive_fraction,
                                     const SampleOptions& options) {
  if (n < 0) throw ConfigError("generate_samples: negative sample count " + std::to_string(n));
  if (!(positive_fraction >= 0.0 && positive_fraction <= 1.0))
    throw ConfigError("generate_samples: positive fraction must lie in [0, 1]");
  const auto& p = world.params();
  std::mt19937_64 rng(derive_seed(p.seed, 0x5A3D0000ULL + options.stream));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> pick_class(1, p.classes);
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    Sample s;
    if (unit(rng) < positive_fraction) {
      s.class_id = pick_class(rng);
      const double theta = geometry::kTwoPi * unit(rng);
      s.features = world.appearance(s.class_id, theta) + gaussian_vector(rng, p.feature_dim, p.noise_sigma);
      const bool mirrored = unit(rng) < p.mirror_label_noise;
      s.azimuth = (options.annotation_noise && mirrored) ? geometry::canonical(-theta) : theta;
    } else {
      s.features = draw_negative(world, rng);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sample> with_flips(const World& world, std::vector<Sample> samples) {
  const std::size_t n = samples.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!samples[i].positive()) continue;
    Sample f;
    f.class_id = samples[i].class_id;
    f.features = world.mirror(f.class_id, samples[i].features);
    f.azimuth = geometry::canonical(geometry::kTwoPi - samples[i].azimuth);
    samples.push_back(std::move(f));
  }
  return samples;
}

void BatchPlan::validate() const {
  if (positives < 0 || negatives < 0 || positives + negatives != batch_size || batch_size <= 0) {
    throw ConfigError("batch plan: positives (" + std::to_string(positives) + ") + negatives (" +
                      std::to_string(negatives) + ") must equal batch size (" +
                      std::to_string(batch_size) + ")");
  }
}

BatchSampler::BatchSampler(std::span<const Sample> pool, BatchPlan plan, std::uint64_t seed)
    : plan_(plan), rng_(seed) {
  plan_.validate();
  int max_class = 0;
  for (const auto& s : pool) max_class = std::max(max_class, s.class_id);
  by_class_.resize(static_cast<std::size_t>(max_class) + 1);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i].class_id < 0) throw ConfigError("sample with negative class id");
    by_class_[static_cast<std::size_t>(pool[i].class_id)].push_back(i);
  }
  for (int c = 1; c <= max_class; ++c) {
    if (!by_class_[static_cast<std::size_t>(c)].empty()) present_classes_.push_back(c);
    n_positive_ += by_class_[static_cast<std::size_t>(c)].size();
  }
  if (n_positive_ < static_cast<std::size_t>(plan_.positives)) {
    throw ConfigError("insufficient pool: positive side has " + std::to_string(n_positive_) +
                      " samples, batch needs " + std::to_string(plan_.positives));
  }
  if (by_class_[0].size() < static_cast<std::size_t>(plan_.negatives)) {
    throw ConfigError("insufficient pool: negative side has " + std::to_string(by_class_[0].size()) +
                      " samples, batch needs " + std::to_string(plan_.negatives));
  }
}

namespace {

// k distinct indices drawn uniformly from `from` (partial Fisher-Yates on a copy
// of the positions only when k is large relative to the pool).
void draw_distinct(const std::vector<std::size_t>& from, std::size_t k, std::mt19937_64& rng,
                   std::vector<std::size_t>& out) {
  if (k == 0) return;
  if (k * 4 > from.size()) {
    std::vector<std::size_t> copy = from;
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> u(i, copy.size() - 1);
      std::swap(copy[i], copy[u(rng)]);
      out.push_back(copy[i]);
    }
    return;
  }
  std::uniform_int_distribution<std::size_t> u(0, from.size() - 1);
  const std::size_t start = out.size();
  while (out.size() - start < k) {
    const std::size_t cand = from[u(rng)];
    if (std::find(out.begin() + static_cast<std::ptrdiff_t>(start), out.end(), cand) == out.end())
      out.push_back(cand);
  }
}

}  // namespace

std::vector<std::size_t> BatchSampler::next() {
  std::vector<std::size_t> batch;
  batch.reserve(static_cast<std::size_t>(plan_.batch_size));
  // Positives: a uniform class per slot, then distinct samples inside each class.
  std::vector<std::size_t> per_class(by_class_.size(), 0);
  std::uniform_int_distribution<std::size_t> pick(0, present_classes_.size() - 1);
  for (int i = 0; i < plan_.positives; ++i) {
    for (;;) {
      const int c = present_classes_[pick(rng_)];
      const auto cu = static_cast<std::size_t>(c);
      if (per_class[cu] < by_class_[cu].size()) {
        ++per_class[cu];
        break;
      }
    }
  }
  for (const int c : present_classes_) {
    const auto cu = static_cast<std::size_t>(c);
    draw_distinct(by_class_[cu], per_class[cu], rng_, batch);
  }
  draw_distinct(by_class_[0], static_cast<std::size_t>(plan_.negatives), rng_, batch);
  return batch;
}

std::vector<Sample> sample_batch(std::span<const Sample> pool, const BatchPlan& plan,
                                 std::uint64_t seed) {
  BatchSampler sampler(pool, plan, seed);
  std::vector<Sample> out;
  for (const std::size_t i : sampler.next()) out.push_back(pool[i]);
  return out;
}

Split split_validation(std::vector<Sample> pool, int validation_size, double positive_ratio,
                       std::uint64_t seed) {
  if (validation_size < 0) throw ConfigError("validation size must be nonnegative");
  const auto want_pos =
      static_cast<std::size_t>(std::llround(validation_size * positive_ratio));
  const auto want_neg = static_cast<std::size_t>(validation_size) - want_pos;
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < pool.size(); ++i) (pool[i].positive() ? pos : neg).push_back(i);
  if (pos.size() < want_pos || neg.size() < want_neg) {
    throw ConfigError("validation split needs " + std::to_string(want_pos) + " positives and " +
                      std::to_string(want_neg) + " negatives; pool has " +
                      std::to_string(pos.size()) + " and " + std::to_string(neg.size()));
  }
  std::mt19937_64 rng(seed);
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);
  std::vector<bool> in_val(pool.size(), false);
  for (std::size_t i = 0; i < want_pos; ++i) in_val[pos[i]] = true;
  for (std::size_t i = 0; i < want_neg; ++i) in_val[neg[i]] = true;
  Split split;
  for (std::size_t i = 0; i < pool.size(); ++i)
    (in_val[i] ? split.validation : split.train).push_back(std::move(pool[i]));
  return split;
}

DetectionScenario generate_detection_scenario(const World& world,
                                              const ScenarioOptions& options) {
  if (options.images < 1) throw ConfigError("scenario needs at least one image");
  if (options.max_objects_per_image < 0 || options.max_objects_per_image > kGridCells * kGridCells)
    throw ConfigError("scenario: objects per image must lie in [0, 9]");
  const auto& p = world.params();
  std::mt19937_64 rng(derive_seed(p.seed ^ options.seed, 0xD37EC7));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> pick_class(1, p.classes);
  const double cell = kImageSize / kGridCells;

  DetectionScenario sc;
  for (int img = 0; img < options.images; ++img) {
    std::vector<int> cells(kGridCells * kGridCells);
    std::iota(cells.begin(), cells.end(), 0);
    std::shuffle(cells.begin(), cells.end(), rng);
    std::uniform_int_distribution<int> pick_count(1, std::max(1, options.max_objects_per_image));
    const int n_obj = options.max_objects_per_image == 0 ? 0 : pick_count(rng);
    const std::size_t first_gt = sc.ground_truth.size();
    for (int o = 0; o < n_obj; ++o) {
      const double cx = (cells[static_cast<std::size_t>(o)] % kGridCells) * cell;
      const double cy = (cells[static_cast<std::size_t>(o)] / kGridCells) * cell;
      const double w = cell * (0.4 + 0.5 * unit(rng));
      const double h = cell * (0.4 + 0.5 * unit(rng));
      const double x1 = cx + (cell - w) * unit(rng);
      const double y1 = cy + (cell - h) * unit(rng);
      metrics::GroundTruth gt;
      gt.image_id = img;
      gt.class_id = pick_class(rng);
      gt.box = {x1, y1, x1 + w, y1 + h};
      const double raw = unit(rng);
      gt.azimuth = options.nested_azimuths
                       ? (std::numbers::pi / 2.0) * std::floor(4.0 * raw)
                       : geometry::kTwoPi * raw;
      gt.difficult = unit(rng) < options.difficult_fraction;
      sc.ground_truth.push_back(gt);

      Proposal prop;
      prop.image_id = img;
      prop.source = static_cast<int>(sc.ground_truth.size() - 1);
      const double j = options.box_jitter;
      prop.box = {x1 + j * w * (2.0 * unit(rng) - 1.0), y1 + j * h * (2.0 * unit(rng) - 1.0),
                  x1 + w + j * w * (2.0 * unit(rng) - 1.0),
                  y1 + h + j * h * (2.0 * unit(rng) - 1.0)};
      prop.features = world.appearance(gt.class_id, gt.azimuth) +
                      gaussian_vector(rng, p.feature_dim, p.noise_sigma);
      sc.proposals.push_back(std::move(prop));
    }
    for (int d = 0; d < options.distractors_per_image; ++d) {
      Proposal prop;
      prop.image_id = img;
      for (;;) {
        const double w = cell * (0.3 + 0.7 * unit(rng));
        const double h = cell * (0.3 + 0.7 * unit(rng));
        const double x1 = (kImageSize - w) * unit(rng);
        const double y1 = (kImageSize - h) * unit(rng);
        prop.box = {x1, y1, x1 + w, y1 + h};
        bool clear = true;
        for (std::size_t g = first_gt; g < sc.ground_truth.size(); ++g)
          if (metrics::iou(prop.box, sc.ground_truth[g].box) >= 0.3) clear = false;
        if (clear) break;
      }
      prop.features = draw_negative(world, rng);
      sc.proposals.push_back(std::move(prop));
    }
  }
  return sc;
}

LabeledDetections oracle_detections(const DetectionScenario& scenario, int classes,
                                    const OracleDetectionOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> az_noise(0.0, 1.0);
  std::uniform_int_distribution<int> pick_class(1, std::max(classes, 1));
  LabeledDetections out;
  for (const auto& prop : scenario.proposals) {
    metrics::Detection d;
    d.image_id = prop.image_id;
    d.box = prop.box;
    if (prop.source >= 0) {
      const auto& gt = scenario.ground_truth[static_cast<std::size_t>(prop.source)];
      d.class_id = gt.class_id;
      d.score = options.object_score_min + (1.0 - options.object_score_min) * unit(rng);
      d.azimuth = geometry::canonical(gt.azimuth + options.azimuth_offset +
                                      options.azimuth_noise * az_noise(rng));
      out.expected.push_back(gt.difficult ? metrics::MatchLabel::Ignored
                                          : metrics::MatchLabel::TruePositive);
    } else {
      if (!options.include_distractors) continue;
      d.class_id = pick_class(rng);
      d.score = options.distractor_score_max * unit(rng);
      d.azimuth = geometry::kTwoPi * unit(rng);
      out.expected.push_back(metrics::MatchLabel::FalsePositive);
    }
    out.detections.push_back(d);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text formats

namespace {

std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class RecordReader {
 public:
  RecordReader(std::istream& in, const char* kind) : in_(in), kind_(kind) {}

  // Next non-comment, non-blank line split into fields. False at end of input.
  bool next(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      fields.clear();
      std::istringstream s(line);
      std::string tok;
      while (s >> tok) fields.push_back(tok);
      ++record_;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(std::string(kind_) + " record " + std::to_string(record_ - 1) + " (line " +
                         std::to_string(line_) + "): " + msg,
                     line_, record_ - 1);
  }

  double real(const std::string& tok) const {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0' || errno == ERANGE) fail("bad real '" + tok + "'");
    return v;
  }

  long integer(const std::string& tok) const {
    errno = 0;
    char* end = nullptr;
    const long v = std::strtol(tok.c_str(), &end, 10);
    if (end == tok.c_str() || *end != '\0' || errno == ERANGE) fail("bad integer '" + tok + "'");
    return v;
  }

  metrics::Box box(const std::vector<std::string>& f, std::size_t at) const {
    metrics::Box b{real(f[at]), real(f[at + 1]), real(f[at + 2]), real(f[at + 3])};
    if (!b.valid()) fail("degenerate box");
    return b;
  }

 private:
  std::istream& in_;
  const char* kind_;
  std::size_t line_ = 0;
  std::size_t record_ = 0;
};

template <typename T, typename Writer>
void save_with(const std::filesystem::path& path, std::span<const T> items, Writer w) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  w(out, items);
}

template <typename Reader>
auto load_with(const std::filesystem::path& path, Reader r) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  return r(in);
}

}  // namespace

void write_samples(std::ostream& out, std::span<const Sample> samples) {
  out << "# class_id azimuth f_1 ... f_D\n";
  for (const auto& s : samples) {
    out << s.class_id << " " << fmt17(s.positive() ? s.azimuth : kNoAzimuth);
    for (Eigen::Index i = 0; i < s.features.size(); ++i) out << " " << fmt17(s.features[i]);
    out << "\n";
  }
}

std::vector<Sample> read_samples(std::istream& in) {
  RecordReader r(in, "samples");
  std::vector<Sample> out;
  std::vector<std::string> f;
  std::size_t dim = 0;
  while (r.next(f)) {
    if (f.size() < 3) r.fail("expected class_id, azimuth and at least one feature");
    if (out.empty()) dim = f.size() - 2;
    if (f.size() - 2 != dim) r.fail("feature count " + std::to_string(f.size() - 2) +
                                    " differs from first record (" + std::to_string(dim) + ")");
    Sample s;
    const long c = r.integer(f[0]);
    if (c < 0) r.fail("negative class id");
    s.class_id = static_cast<int>(c);
    s.azimuth = r.real(f[1]);
    if (s.positive() && !std::isfinite(s.azimuth)) r.fail("positive sample without azimuth");
    if (!s.positive()) s.azimuth = kNoAzimuth;
    s.features.resize(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) {
      s.features[static_cast<Eigen::Index>(i)] = r.real(f[i + 2]);
      if (!std::isfinite(s.features[static_cast<Eigen::Index>(i)])) r.fail("non-finite feature");
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_detections(std::ostream& out, std::span<const metrics::Detection> dets) {
  out << "# image_id class_id score x1 y1 x2 y2 azimuth\n";
  for (const auto& d : dets) {
    out << d.image_id << " " << d.class_id << " " << fmt17(d.score) << " " << fmt17(d.box.x1)
        << " " << fmt17(d.box.y1) << " " << fmt17(d.box.x2) << " " << fmt17(d.box.y2) << " "
        << fmt17(d.azimuth) << "\n";
  }
}

std::vector<metrics::Detection> read_detections(std::istream& in) {
  RecordReader r(in, "detections");
  std::vector<metrics::Detection> out;
  std::vector<std::string> f;
  while (r.next(f)) {
    if (f.size() != 8) r.fail("expected 8 fields, found " + std::to_string(f.size()));
    metrics::Detection d;
    d.image_id = static_cast<int>(r.integer(f[0]));
    d.class_id = static_cast<int>(r.integer(f[1]));
    d.score = r.real(f[2]);
    d.box = r.box(f, 3);
    d.azimuth = r.real(f[7]);
    out.push_back(d);
  }
  return out;
}

void write_ground_truth(std::ostream& out, std::span<const metrics::GroundTruth> gts) {
  out << "# image_id class_id x1 y1 x2 y2 azimuth difficult\n";
  for (const auto& g : gts) {
    out << g.image_id << " " << g.class_id << " " << fmt17(g.box.x1) << " " << fmt17(g.box.y1)
        << " " << fmt17(g.box.x2) << " " << fmt17(g.box.y2) << " " << fmt17(g.azimuth) << " "
        << (g.difficult ? 1 : 0) << "\n";
  }
}

std::vector<metrics::GroundTruth> read_ground_truth(std::istream& in) {
  RecordReader r(in, "ground-truth");
  std::vector<metrics::GroundTruth> out;
  std::vector<std::string> f;
  while (r.next(f)) {
    if (f.size() != 8) r.fail("expected 8 fields, found " + std::to_string(f.size()));
    metrics::GroundTruth g;
    g.image_id = static_cast<int>(r.integer(f[0]));
    g.class_id = static_cast<int>(r.integer(f[1]));
    g.box = r.box(f, 2);
    g.azimuth = r.real(f[6]);
    const long diff = r.integer(f[7]);
    if (diff != 0 && diff != 1) r.fail("difficult flag must be 0 or 1");
    g.difficult = diff == 1;
    out.push_back(g);
  }
  return out;
}

void write_proposals(std::ostream& out, std::span<const Proposal> proposals) {
  out << "# image_id source x1 y1 x2 y2 f_1 ... f_D\n";
  for (const auto& p : proposals) {
    out << p.image_id << " " << p.source << " " << fmt17(p.box.x1) << " " << fmt17(p.box.y1) << " "
        << fmt17(p.box.x2) << " " << fmt17(p.box.y2);
    for (Eigen::Index i = 0; i < p.features.size(); ++i) out << " " << fmt17(p.features[i]);
    out << "\n";
  }
}

std::vector<Proposal> read_proposals(std::istream& in) {
  RecordReader r(in, "proposals");
  std::vector<Proposal> out;
  std::vector<std::string> f;
  std::size_t dim = 0;
  while (r.next(f)) {
    if (f.size() < 7) r.fail("expected image_id, source, box and features");
    if (out.empty()) dim = f.size() - 6;
    if (f.size() - 6 != dim) r.fail("feature count differs from first record");
    Proposal p;
    p.image_id = static_cast<int>(r.integer(f[0]));
    p.source = static_cast<int>(r.integer(f[1]));
    p.box = r.box(f, 2);
    p.features.resize(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) p.features[static_cast<Eigen::Index>(i)] = r.real(f[i + 6]);
    out.push_back(std::move(p));
  }
  return out;
}

void save_samples(const std::filesystem::path& path, std::span<const Sample> samples) {
  save_with<Sample>(path, samples, [](std::ostream& o, auto s) { write_samples(o, s); });
}
std::vector<Sample> load_samples(const std::filesystem::path& path) {
  return load_with(path, [](std::istream& i) { return read_samples(i); });
}
void save_detections(const std::filesystem::path& path, std::span<const metrics::Detection> dets) {
  save_with<metrics::Detection>(path, dets, [](std::ostream& o, auto s) { write_detections(o, s); });
}
std::vector<metrics::Detection> load_detections(const std::filesystem::path& path) {
  return load_with(path, [](std::istream& i) { return read_detections(i); });
}
void save_ground_truth(const std::filesystem::path& path,
                       std::span<const metrics::GroundTruth> gts) {
  save_with<metrics::GroundTruth>(path, gts,
                                  [](std::ostream& o, auto s) { write_ground_truth(o, s); });
}
std::vector<metrics::GroundTruth> load_ground_truth(const std::filesystem::path& path) {
  return load_with(path, [](std::istream& i) { return read_ground_truth(i); });
}
void save_proposals(const std::filesystem::path& path, std::span<const Proposal> proposals) {
  save_with<Proposal>(path, proposals, [](std::ostream& o, auto s) { write_proposals(o, s); });
}
std::vector<Proposal> load_proposals(const std::filesystem::path& path) {
  return load_with(path, [](std::istream& i) { return read_proposals(i); });
}

}  // namespace poselab::data
