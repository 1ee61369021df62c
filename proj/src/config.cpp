#include "poselab/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "poselab/error.hpp"

namespace poselab::config {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_real(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || errno == ERANGE)
    throw ConfigError(key + ": expected a real number, got '" + v + "'");
  return d;
}

long to_integer(const std::string& key, const std::string& v) {
  // Accept integral reals such as "2e4" or "8.0" so sweep values round-trip.
  const double d = to_real(key, v);
  if (d != static_cast<double>(static_cast<long>(d)))
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return static_cast<long>(d);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

using harness::ExperimentConfig;

struct KeyDef {
  std::string key;
  bool numeric;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define REAL_KEY(name, field)                                                              \
  KeyDef {                                                                                \
    name, true, [](ExperimentConfig& c, const std::string& v) { c.field = to_real(name, v); }, \
        [](const ExperimentConfig& c) { return format_real(c.field); }                     \
  }
#define INT_KEY(name, field, type)                                                   \
  KeyDef {                                                                          \
    name, true,                                                                      \
        [](ExperimentConfig& c, const std::string& v) {                              \
          c.field = static_cast<type>(to_integer(name, v));                          \
        },                                                                           \
        [](const ExperimentConfig& c) { return std::to_string(c.field); }           \
  }
#define BOOL_KEY(name, field)                                                                  \
  KeyDef {                                                                                    \
    name, false, [](ExperimentConfig& c, const std::string& v) { c.field = to_bool(name, v); }, \
        [](const ExperimentConfig& c) { return std::string(c.field ? "true" : "false"); }     \
  }

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = {
      {"experiment.representation", false,
       [](ExperimentConfig& c, const std::string& v) {
         c.representation = harness::parse_representation(v);
       },
       [](const ExperimentConfig& c) { return std::string(harness::to_string(c.representation)); }},
      INT_KEY("experiment.seed", seed, std::uint64_t),
      INT_KEY("world.classes", world.classes, int),
      INT_KEY("world.feature_dim", world.feature_dim, int),
      REAL_KEY("world.mean_norm", world.mean_norm),
      REAL_KEY("world.signal_radius", world.signal_radius),
      REAL_KEY("world.noise_sigma", world.noise_sigma),
      REAL_KEY("world.background_spread", world.background_spread),
      REAL_KEY("world.mirror_label_noise", world.mirror_label_noise),
      REAL_KEY("world.hard_negative_fraction", world.hard_negative_fraction),
      REAL_KEY("world.hard_negative_gap", world.hard_negative_gap),
      INT_KEY("world.seed", world.seed, std::uint64_t),
      INT_KEY("data.pool_size", pool_size, long),
      REAL_KEY("data.pool_positive_fraction", pool_positive_fraction),
      BOOL_KEY("data.flip_augmentation", flip_augmentation),
      INT_KEY("model.views", views, int),
      {"model.hidden", false,
       [](ExperimentConfig& c, const std::string& v) {
         std::vector<int> widths;
         std::stringstream s(v);
         std::string item;
         while (std::getline(s, item, ',')) {
           const long w = to_integer("model.hidden", trim(item));
           if (w <= 0) throw ConfigError("model.hidden: widths must be positive");
           widths.push_back(static_cast<int>(w));
         }
         c.hidden = widths;
       },
       [](const ExperimentConfig& c) {
         std::string out;
         for (std::size_t i = 0; i < c.hidden.size(); ++i)
           out += (i ? "," : "") + std::to_string(c.hidden[i]);
         return out;
       }},
      REAL_KEY("loss.k", hyper.k),
      REAL_KEY("loss.delta", hyper.delta),
      REAL_KEY("loss.lambda", hyper.lambda),
      {"loss.norm", false,
       [](ExperimentConfig& c, const std::string& v) { c.hyper.norm = harness::parse_norm(v); },
       [](const ExperimentConfig& c) { return std::string(harness::to_string(c.hyper.norm)); }},
      INT_KEY("train.batch_size", plan.batch_size, int),
      INT_KEY("train.positives_per_batch", plan.positives, int),
      INT_KEY("train.negatives_per_batch", plan.negatives, int),
      REAL_KEY("train.initial_lr", initial_lr),
      REAL_KEY("train.momentum", momentum),
      REAL_KEY("train.weight_decay", weight_decay),
      INT_KEY("train.eval_every", eval_every, int),
      INT_KEY("train.lr_halving_patience", lr_halving_patience, int),
      INT_KEY("train.validation_size", validation_size, int),
      INT_KEY("train.max_iterations", max_iterations, long),
      REAL_KEY("train.lr_floor", lr_floor),
      INT_KEY("eval.images", eval.scenario.images, int),
      INT_KEY("eval.max_objects_per_image", eval.scenario.max_objects_per_image, int),
      INT_KEY("eval.distractors_per_image", eval.scenario.distractors_per_image, int),
      REAL_KEY("eval.difficult_fraction", eval.scenario.difficult_fraction),
      REAL_KEY("eval.box_jitter", eval.scenario.box_jitter),
      BOOL_KEY("eval.nested_azimuths", eval.scenario.nested_azimuths),
      INT_KEY("eval.seed", eval.scenario.seed, std::uint64_t),
      REAL_KEY("eval.iou_threshold", eval.iou_threshold),
      {"eval.view_criterion", false,
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "same-bin")
           c.eval.criterion = metrics::ViewCriterion::SameBin;
         else if (v == "angular-error")
           c.eval.criterion = metrics::ViewCriterion::AngularError;
         else
           throw ConfigError("eval.view_criterion: expected same-bin or angular-error, got '" + v +
                             "'");
       },
       [](const ExperimentConfig& c) {
         return std::string(c.eval.criterion == metrics::ViewCriterion::SameBin ? "same-bin"
                                                                                : "angular-error");
       }},
  };
  return table;
}

#undef REAL_KEY
#undef INT_KEY
#undef BOOL_KEY

const KeyDef* find_key(const std::string& key) {
  for (const auto& k : key_table())
    if (k.key == key) return &k;
  return nullptr;
}

const std::map<std::string, std::string>& aliases() {
  static const std::map<std::string, std::string> m = {
      {"k", "loss.k"},
      {"delta", "loss.delta"},
      {"lambda", "loss.lambda"},
      {"views", "model.views"},
      {"lr", "train.initial_lr"},
      {"momentum", "train.momentum"},
      {"weight_decay", "train.weight_decay"},
      {"iterations", "train.max_iterations"},
      {"patience", "train.lr_halving_patience"},
      {"seed", "experiment.seed"},
      {"noise", "world.noise_sigma"},
      {"mirror_noise", "world.mirror_label_noise"},
  };
  return m;
}

bool informational(const std::string& key) {
  return key.rfind("artifact.", 0) == 0 || key.rfind("manifest.", 0) == 0;
}

}  // namespace

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Entries parse(std::istream& in) {
  Entries out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config line " + std::to_string(line_no) + ": expected 'key = value'",
                       line_no, out.size());
    }
    std::string key = trim(t.substr(0, eq));
    if (key.empty()) {
      throw ParseError("config line " + std::to_string(line_no) + ": empty key", line_no,
                       out.size());
    }
    out.emplace_back(std::move(key), trim(t.substr(eq + 1)));
  }
  return out;
}

Entries read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read config " + path.string());
  return parse(in);
}

void apply(ExperimentConfig& config, const std::string& key, const std::string& value) {
  const KeyDef* def = find_key(key);
  if (!def) throw ConfigError("unknown config key '" + key + "'");
  def->set(config, value);
}

ExperimentConfig resolve(const Entries& file, const Entries& overrides) {
  harness::Representation rep = harness::Representation::Discrete;
  for (const auto* entries : {&file, &overrides})
    for (const auto& [k, v] : *entries)
      if (k == "experiment.representation") rep = harness::parse_representation(v);
  ExperimentConfig cfg = ExperimentConfig::defaults(rep);
  for (const auto* entries : {&file, &overrides})
    for (const auto& [k, v] : *entries)
      if (!informational(k)) apply(cfg, k, v);
  return cfg;
}

void write(std::ostream& out, const ExperimentConfig& config) {
  std::string section;
  for (const auto& k : key_table()) {
    const std::string s = k.key.substr(0, k.key.find('.'));
    if (s != section) {
      if (!section.empty()) out << "\n";
      section = s;
    }
    out << k.key << " = " << k.get(config) << "\n";
  }
}

std::vector<std::string> numeric_keys() {
  std::vector<std::string> keys;
  for (const auto& k : key_table())
    if (k.numeric) keys.push_back(k.key);
  return keys;
}

std::string key_for_axis(const std::string& axis) {
  if (const auto it = aliases().find(axis); it != aliases().end()) return it->second;
  if (const KeyDef* def = find_key(axis); def && def->numeric) return axis;
  return {};
}

std::vector<std::string> axis_aliases() {
  std::vector<std::string> out;
  for (const auto& [a, k] : aliases()) out.push_back(a);
  return out;
}

}  // namespace poselab::config
