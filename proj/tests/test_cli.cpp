#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "poselab/cli.hpp"

namespace fs = std::filesystem;
using poselab::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream o, e;
  const int code = run(args, o, e);
  return {code, o.str(), e.str()};
}

fs::path fresh(const std::string& name) {
  auto p = fs::temp_directory_path() / ("poselab_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Small enough to train in well under a second.
std::vector<std::string> quick(std::vector<std::string> args) {
  for (const char* s : {"world.feature_dim=12", "model.hidden=16", "data.pool_size=2000",
                        "train.validation_size=128", "train.max_iterations=60",
                        "train.eval_every=20", "eval.images=20"}) {
    args.push_back("--set");
    args.push_back(s);
  }
  return args;
}

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(call({}).code == 2);
  CHECK(call({"frobnicate"}).code == 2);
  CHECK(call({"train", "--views", "many"}).code == 2);
  const auto r = call({"train", "--set", "loss.kk=1", "--out", fresh("bad").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("loss.kk") != std::string::npos);
  const auto m = call({"eval", "--model", "/nonexistent/model.txt", "--out", fresh("nomodel").string()});
  CHECK(m.code != 0);
  CHECK(m.err.find("/nonexistent/model.txt") != std::string::npos);
}

TEST_CASE("continuous training with several classes is rejected") {
  const auto r = call({"train", "--representation", "continuous", "--set", "world.classes=3",
                       "--out", fresh("cont").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("single-class") != std::string::npos);
}

TEST_CASE("selfcheck passes") {
  const auto r = call({"selfcheck", "--grad-instances", "5", "--metric-instances", "100"});
  CHECK(r.code == 0);
  CHECK(r.out.find("FAIL") == std::string::npos);
}

TEST_CASE("gen-data, train, eval, report with manifests") {
  const auto root = fresh("pipeline");
  const auto data = root / "data", a = root / "a", b = root / "b";
  REQUIRE(call(quick({"gen-data", "--out", data.string()})).code == 0);
  for (const char* f : {"train_samples.txt", "validation_samples.txt", "scenario_gt.txt",
                        "scenario_proposals.txt", "manifest.txt"})
    CHECK(fs::exists(data / f));

  REQUIRE(call(quick({"train", "--representation", "joint-b2", "--lambda", "2", "--data",
                      data.string(), "--out", a.string()}))
              .code == 0);
  const std::string manifest = slurp(a / "manifest.txt");
  CHECK(manifest.find("manifest.command = train") != std::string::npos);
  CHECK(manifest.find("experiment.representation = joint-b2") != std::string::npos);
  CHECK(manifest.find("loss.lambda = 2") != std::string::npos);
  CHECK(manifest.find("artifact.model.txt.sha256 = " + poselab::cli::sha256_file(a / "model.txt")) !=
        std::string::npos);
  CHECK(fs::exists(a / "trace.csv"));

  const auto ev = call({"eval", "--config", (a / "manifest.txt").string(), "--model",
                        (a / "model.txt").string(), "--data", data.string(), "--out",
                        (a / "eval").string()});
  REQUIRE(ev.code == 0);
  const std::string metrics = slurp(a / "eval" / "metrics.csv");
  CHECK(metrics.rfind("class,AP,AVP@4,AVP@8,AVP@16,AVP@24\n", 0) == 0);
  CHECK(metrics.find("\nmean,") != std::string::npos);
  CHECK(fs::exists(a / "eval" / "detections.txt"));
  CHECK(fs::exists(a / "eval" / "pr_class1.svg"));

  // Retraining from the manifest reproduces the checkpoint byte for byte.
  REQUIRE(call({"train", "--config", (a / "manifest.txt").string(), "--data", data.string(),
                "--out", b.string()})
              .code == 0);
  CHECK(slurp(a / "model.txt") == slurp(b / "model.txt"));

  const auto rep = call({"report", "b2=" + (a / "eval" / "metrics.csv").string(),
                         (a / "eval" / "metrics.csv").string(), "--out", (root / "rep").string()});
  REQUIRE(rep.code == 0);
  CHECK(rep.out.rfind("metric,b2,eval\n", 0) == 0);
  CHECK(slurp(root / "rep" / "report.csv").rfind("run,class,AP,", 0) == 0);
  CHECK(call({"report", (root / "missing.csv").string(), "--out", (root / "rep2").string()}).code != 0);
  fs::remove_all(root);
}

TEST_CASE("sweep writes a table and a plot") {
  const auto out = fresh("sweep");
  const auto r = call(quick({"sweep", "--axis", "delta", "--values", "0.5,1", "--representation",
                             "continuous", "--out", out.string()}));
  REQUIRE(r.code == 0);
  CHECK(slurp(out / "sweep.csv").rfind("metric,delta=0.5,delta=1\n", 0) == 0);
  CHECK(fs::exists(out / "sweep.svg"));
  CHECK(slurp(out / "manifest.txt").find("artifact.sweep.csv.sha256") != std::string::npos);
  CHECK(call(quick({"sweep", "--axis", "colour", "--values", "1", "--out", out.string()})).code == 2);
  CHECK(call(quick({"sweep", "--axis", "k", "--values", "1,x", "--out", out.string()})).code == 2);
  fs::remove_all(out);
}
