#include "poselab/cli.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "poselab/config.hpp"
#include "poselab/data.hpp"
#include "poselab/error.hpp"
#include "poselab/harness.hpp"
#include "poselab/metrics.hpp"
#include "poselab/oracles.hpp"
#include "poselab/svg.hpp"

namespace poselab::cli {

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

/// Configuration and usage mistakes; reported with exit status 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct Common {
  std::string config;
  std::string seed;
  std::string out = ".";
  std::string representation;
  std::string views;
  std::string lambda;
  std::string k;
  std::string delta;
  std::string norm;
  std::vector<std::string> sets;
};

void add_common(CLI::App& app, Common& c) {
  app.add_option("--config", c.config, "key = value config file (a manifest works too)");
  app.add_option("--seed", c.seed, "experiment seed");
  app.add_option("--out", c.out, "output directory")->capture_default_str();
  app.add_option("--representation", c.representation,
                 "discrete | continuous | joint-a | joint-b1 | joint-b2");
  app.add_option("--views", c.views, "bins P of the discrete head");
  app.add_option("--lambda", c.lambda, "classification weight of joint heads");
  app.add_option("--k", c.k, "weight of the repulsive term");
  app.add_option("--delta", c.delta, "repulsion length scale");
  app.add_option("--norm", c.norm, "l1 | l2 | sql2");
  app.add_option("--set", c.sets, "extra override key=value (repeatable)");
}

harness::ExperimentConfig resolve_config(const Common& c) {
  config::Entries file;
  if (!c.config.empty()) {
    try {
      file = config::read_file(c.config);
    } catch (const ParseError& e) {
      throw UsageError("--config " + c.config + ": " + e.what());
    } catch (const Error& e) {
      throw UsageError("--config " + c.config + ": " + e.what());
    }
  }
  config::Entries overrides;
  std::vector<std::string> origin;
  auto flag = [&](const std::string& value, const char* key, const char* name) {
    if (value.empty()) return;
    overrides.emplace_back(key, value);
    origin.emplace_back(name);
  };
  flag(c.representation, "experiment.representation", "--representation");
  flag(c.seed, "experiment.seed", "--seed");
  flag(c.views, "model.views", "--views");
  flag(c.lambda, "loss.lambda", "--lambda");
  flag(c.k, "loss.k", "--k");
  flag(c.delta, "loss.delta", "--delta");
  flag(c.norm, "loss.norm", "--norm");
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw UsageError("--set " + s + ": expected key=value");
    overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    origin.push_back("--set " + s);
  }
  // Pin every error on the flag that introduced it before resolving.
  for (std::size_t i = 0; i < overrides.size(); ++i) {
    harness::ExperimentConfig scratch;
    try {
      config::apply(scratch, overrides[i].first, overrides[i].second);
    } catch (const Error& e) {
      throw UsageError(origin[i] + ": " + e.what());
    }
  }
  harness::ExperimentConfig cfg;
  try {
    cfg = config::resolve(file, overrides);
  } catch (const Error& e) {
    throw UsageError((c.config.empty() ? std::string("config") : "--config " + c.config) + ": " +
                     e.what());
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw UsageError(std::string("invalid configuration: ") + e.what());
  }
  return cfg;
}

fs::path prepare_out(const Common& c) {
  fs::path out(c.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error("--out " + c.out + ": " + ec.message());
  return out;
}

template <typename Fn>
void write_file(const fs::path& path, Fn&& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  body(f);
  if (!f) throw Error("failed writing " + path.string());
}

void write_manifest(const fs::path& dir, const std::string& command,
                    const harness::ExperimentConfig& cfg,
                    const std::vector<std::pair<std::string, std::string>>& info,
                    const std::vector<std::string>& artifacts) {
  write_file(dir / "manifest.txt", [&](std::ostream& out) {
    out << "# poselab run manifest; reproduce with: poselab " << command
        << " --config manifest.txt\n";
    out << "manifest.command = " << command << "\n";
    for (const auto& [k, v] : info) out << "manifest." << k << " = " << v << "\n";
    out << "\n";
    config::write(out, cfg);
    out << "\n";
    for (const auto& a : artifacts)
      out << "artifact." << a << ".sha256 = " << sha256_file(dir / a) << "\n";
  });
}

std::vector<double> parse_values(const std::string& list) {
  std::vector<double> values;
  std::stringstream s(list);
  std::string item;
  while (std::getline(s, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || *end != '\0') throw UsageError("--values: cannot parse '" + item + "'");
    values.push_back(v);
  }
  if (values.empty()) throw UsageError("--values: at least one value required");
  return values;
}

// ---------------------------------------------------------------------------

int cmd_gen_data(const Common& c, std::ostream& out) {
  const auto cfg = resolve_config(c);
  const auto dir = prepare_out(c);
  const auto data = harness::make_training_data(cfg);
  const auto scenario = harness::make_scenario(cfg);
  data::save_samples(dir / "train_samples.txt", data.train);
  data::save_samples(dir / "validation_samples.txt", data.validation);
  data::save_ground_truth(dir / "scenario_gt.txt", scenario.ground_truth);
  data::save_proposals(dir / "scenario_proposals.txt", scenario.proposals);
  write_manifest(dir, "gen-data", cfg, {},
                 {"train_samples.txt", "validation_samples.txt", "scenario_gt.txt",
                  "scenario_proposals.txt"});
  out << "wrote " << data.train.size() << " training and " << data.validation.size()
      << " validation samples, " << scenario.proposals.size() << " proposals to " << dir.string()
      << "\n";
  return kOk;
}

harness::TrainingData load_or_make(const harness::ExperimentConfig& cfg, const std::string& dir) {
  if (dir.empty()) return harness::make_training_data(cfg);
  harness::TrainingData d;
  d.train = data::load_samples(fs::path(dir) / "train_samples.txt");
  d.validation = data::load_samples(fs::path(dir) / "validation_samples.txt");
  return d;
}

int cmd_train(const Common& c, const std::string& data_dir, std::ostream& out,
              std::ostream& err) {
  const auto cfg = resolve_config(c);
  const auto dir = prepare_out(c);
  const auto data = load_or_make(cfg, data_dir);
  std::vector<std::pair<std::string, std::string>> info;
  if (!data_dir.empty()) info.emplace_back("data", data_dir);
  try {
    const auto result = harness::train(cfg, data);
    harness::save_model(dir / "model.txt", result.model);
    write_file(dir / "trace.csv",
               [&](std::ostream& f) { harness::write_trace_csv(f, result.trace); });
    write_manifest(dir, "train", cfg, info, {"model.txt", "trace.csv"});
    const double final_val = result.trace.records.empty()
                                 ? result.trace.initial_validation_loss
                                 : result.trace.records.back().validation_loss;
    out << "trained " << harness::to_string(cfg.representation) << " for "
        << (result.trace.records.empty() ? 0 : result.trace.records.back().iteration)
        << " iterations; validation loss " << result.trace.initial_validation_loss << " -> "
        << final_val << "\n";
  } catch (const harness::TrainingDiverged& e) {
    write_file(dir / "trace.csv", [&](std::ostream& f) { harness::write_trace_csv(f, e.trace()); });
    err << "error: " << e.what() << " (partial trace in " << (dir / "trace.csv").string() << ")\n";
    return kFailure;
  }
  return kOk;
}

void write_pr_svg(const fs::path& path, const metrics::ClassMetrics& cm) {
  std::vector<svg::Series> series;
  auto add = [&](const std::string& label, const metrics::PRCurve& curve) {
    svg::Series s{label, {}, {}};
    for (const auto& p : curve.points) {
      s.x.push_back(p.recall);
      s.y.push_back(p.precision);
    }
    series.push_back(std::move(s));
  };
  add("AP " + metrics::format_metric(cm.ap.ap), cm.ap);
  for (std::size_t v = 0; v < metrics::kReportViews.size(); ++v)
    add("AVP@" + std::to_string(metrics::kReportViews[v]) + " " +
            metrics::format_metric(cm.avp[v].ap),
        cm.avp[v]);
  write_file(path, [&](std::ostream& f) {
    svg::write_line_plot(f, {"class " + std::to_string(cm.class_id), "recall", "precision", true},
                         series);
  });
}

int cmd_eval(const Common& c, const std::string& model_path, const std::string& data_dir,
             std::ostream& out) {
  const auto cfg = resolve_config(c);
  const auto dir = prepare_out(c);
  const auto model = harness::load_model(model_path);
  if (model.representation != cfg.representation || model.classes != cfg.classes())
    throw UsageError("--model " + model_path + ": model head (" +
                     std::string(harness::to_string(model.representation)) + ", " +
                     std::to_string(model.classes) + " classes) does not match the configuration");
  data::DetectionScenario scenario;
  std::vector<std::pair<std::string, std::string>> info{
      {"model", model_path}, {"model_sha256", sha256_file(model_path)}};
  if (data_dir.empty()) {
    scenario = harness::make_scenario(cfg);
  } else {
    scenario.ground_truth = data::load_ground_truth(fs::path(data_dir) / "scenario_gt.txt");
    scenario.proposals = data::load_proposals(fs::path(data_dir) / "scenario_proposals.txt");
    info.emplace_back("data", data_dir);
  }
  const auto dets = harness::detect(model, scenario);
  const auto table = metrics::evaluate_detections(dets, scenario.ground_truth, model.classes,
                                                  cfg.eval.iou_threshold, cfg.eval.criterion);
  data::save_detections(dir / "detections.txt", dets);
  write_file(dir / "metrics.csv", [&](std::ostream& f) { metrics::write_metrics_csv(f, table); });
  std::vector<std::string> artifacts{"detections.txt", "metrics.csv"};
  for (const auto& cm : table.classes) {
    const std::string name = "pr_class" + std::to_string(cm.class_id) + ".svg";
    write_pr_svg(dir / name, cm);
    artifacts.push_back(name);
  }
  write_manifest(dir, "eval", cfg, info, artifacts);
  metrics::write_metrics_csv(out, table);
  return kOk;
}

int cmd_sweep(const Common& c, const std::string& axis, const std::string& values, int jobs,
              std::ostream& out) {
  const auto cfg = resolve_config(c);
  if (config::key_for_axis(axis).empty()) {
    std::string valid;
    for (const auto& a : harness::sweep_axes()) valid += (valid.empty() ? "" : ", ") + a;
    throw UsageError("--axis " + axis + ": unknown axis; valid axes: " + valid);
  }
  const auto vals = parse_values(values);
  const auto dir = prepare_out(c);
  harness::SweepReport report;
  try {
    report = harness::sweep(axis, vals, cfg, jobs);
  } catch (const ConfigError& e) {
    throw UsageError("--values " + values + ": " + e.what());
  }
  write_file(dir / "sweep.csv", [&](std::ostream& f) { harness::write_sweep_csv(f, report); });
  write_file(dir / "sweep.svg", [&](std::ostream& f) { harness::write_sweep_svg(f, report); });
  write_manifest(dir, "sweep", cfg, {{"axis", axis}, {"values", values}},
                 {"sweep.csv", "sweep.svg"});
  harness::write_sweep_csv(out, report);
  return kOk;
}

struct MetricsFile {
  std::string label;
  std::vector<std::pair<std::string, std::array<std::string, 5>>> rows;  // class -> values
};

MetricsFile read_metrics_csv(const std::string& label, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != metrics::kMetricsHeader)
    throw ParseError(path.string() + ": line 1: expected header '" + metrics::kMetricsHeader + "'",
                     1, 0);
  MetricsFile f{label, {}};
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream s(line);
    std::string cls;
    std::array<std::string, 5> vals;
    std::getline(s, cls, ',');
    for (auto& v : vals)
      if (!std::getline(s, v, ','))
        throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                             ": expected 6 fields",
                         line_no, f.rows.size());
    f.rows.emplace_back(cls, vals);
  }
  return f;
}

int cmd_report(const Common& c, const std::vector<std::string>& inputs, std::ostream& out) {
  if (inputs.empty()) throw UsageError("report: at least one metrics CSV required");
  std::vector<MetricsFile> files;
  for (const auto& in : inputs) {
    std::string label, path = in;
    if (const auto eq = in.find('='); eq != std::string::npos) {
      label = in.substr(0, eq);
      path = in.substr(eq + 1);
    } else {
      const fs::path p(in);
      label = p.has_parent_path() ? p.parent_path().filename().string() : p.stem().string();
    }
    files.push_back(read_metrics_csv(label, path));
  }
  const auto dir = prepare_out(c);
  write_file(dir / "report.csv", [&](std::ostream& f) {
    f << "run," << metrics::kMetricsHeader << "\n";
    for (const auto& m : files)
      for (const auto& [cls, vals] : m.rows) {
        f << m.label << ',' << cls;
        for (const auto& v : vals) f << ',' << v;
        f << '\n';
      }
  });
  auto summary = [&](std::ostream& f) {
    f << "metric";
    for (const auto& m : files) f << ',' << m.label;
    f << '\n';
    const char* names[] = {"AP", "AVP@4", "AVP@8", "AVP@16", "AVP@24"};
    for (std::size_t col = 0; col < 5; ++col) {
      f << names[col];
      for (const auto& m : files) {
        std::string v = "";
        for (const auto& [cls, vals] : m.rows)
          if (cls == "mean") v = vals[col];
        f << ',' << v;
      }
      f << '\n';
    }
  };
  write_file(dir / "report_summary.csv", summary);
  summary(out);
  return kOk;
}

int cmd_selfcheck(int grad_instances, int metric_instances, std::uint64_t seed, std::ostream& out) {
  bool ok = true;
  for (const auto& h : oracles::gradient_suite(grad_instances, seed)) {
    const bool pass = h.worst_relative_error < 1e-5;
    ok = ok && pass;
    out << (pass ? "PASS" : "FAIL") << " gradient " << h.head << ": worst relative error "
        << h.worst_relative_error << " over " << h.instances << " instances\n";
  }
  const auto m = oracles::metric_oracle_suite(metric_instances, seed + 1);
  const bool pass = m.passed();
  ok = ok && pass;
  out << (pass ? "PASS" : "FAIL") << " metrics oracle: " << m.instances
      << " instances, max |AP - oracle| " << m.max_ap_error << ", max |AVP - oracle| "
      << m.max_avp_error << ", label mismatches " << m.label_mismatches << ", AVP > AP "
      << m.avp_above_ap << "\n";
  return ok ? kOk : kFailure;
}

}  // namespace

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot hash " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw Error("sha256: cannot allocate digest context");
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 15> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", md[i]);
    hex += byte;
  }
  return hex;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"poselab: pose-representation heads, training protocol and AP/AVP evaluation",
               "poselab"};
  app.require_subcommand(1);

  Common gen_c, train_c, eval_c, sweep_c, report_c;
  std::string train_data, eval_model, eval_data, axis, values;
  std::vector<std::string> report_inputs;
  int jobs = 1, grad_instances = 50, metric_instances = 1000;
  std::uint64_t check_seed = 0;

  auto* gen = app.add_subcommand("gen-data", "write training samples and an evaluation scenario");
  add_common(*gen, gen_c);
  auto* tr = app.add_subcommand("train", "train a head; writes model.txt and trace.csv");
  add_common(*tr, train_c);
  tr->add_option("--data", train_data, "directory written by gen-data (default: regenerate)");
  auto* ev = app.add_subcommand("eval", "score a scenario; writes metrics.csv and PR curves");
  add_common(*ev, eval_c);
  ev->add_option("--model", eval_model, "model.txt written by train")->required();
  ev->add_option("--data", eval_data, "directory written by gen-data (default: regenerate)");
  auto* sw = app.add_subcommand("sweep", "train and evaluate once per value of one parameter");
  add_common(*sw, sweep_c);
  sw->add_option("--axis", axis, "parameter name, e.g. k, delta, lambda, views")->required();
  sw->add_option("--values", values, "comma-separated values")->required();
  sw->add_option("--jobs", jobs, "parallel sweep points")->check(CLI::PositiveNumber);
  auto* rp = app.add_subcommand("report", "merge metrics CSVs into one comparison table");
  add_common(*rp, report_c);
  rp->add_option("inputs", report_inputs, "metrics CSVs, optionally label=path")->required();
  auto* sc = app.add_subcommand("selfcheck", "gradient checks and metric oracle equivalence");
  sc->add_option("--grad-instances", grad_instances, "random instances per loss head");
  sc->add_option("--metric-instances", metric_instances, "random metric instances");
  sc->add_option("--seed", check_seed, "seed of the random instances");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "error: " << e.what() << "\n";
    err << "run 'poselab --help' for usage\n";
    return kUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(gen_c, out);
    if (tr->parsed()) return cmd_train(train_c, train_data, out, err);
    if (ev->parsed()) return cmd_eval(eval_c, eval_model, eval_data, out);
    if (sw->parsed()) return cmd_sweep(sweep_c, axis, values, jobs, out);
    if (rp->parsed()) return cmd_report(report_c, report_inputs, out);
    if (sc->parsed()) return cmd_selfcheck(grad_instances, metric_instances, check_seed, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace poselab::cli
