#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "poselab/config.hpp"
#include "poselab/error.hpp"

using namespace poselab;

TEST_CASE("parse skips comments and blank lines") {
  std::istringstream in("# header\n\nloss.k = 320\n  model.views=4  \n");
  const auto e = config::parse(in);
  REQUIRE(e.size() == 2);
  CHECK(e[0] == std::pair<std::string, std::string>{"loss.k", "320"});
  CHECK(e[1] == std::pair<std::string, std::string>{"model.views", "4"});
}

TEST_CASE("parse errors carry the line number") {
  std::istringstream in("loss.k = 1\n\nthis line is wrong\n");
  try {
    config::parse(in);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  std::istringstream empty_key(" = 4\n");
  CHECK_THROWS_AS(config::parse(empty_key), ParseError);
}

TEST_CASE("resolve layers defaults, file and overrides") {
  const config::Entries file = {{"experiment.representation", "continuous"}, {"loss.k", "100"}};
  const config::Entries over = {{"loss.k", "200"}, {"manifest.command", "train"},
                                {"artifact.model.txt.sha256", "00"}};
  const auto c = config::resolve(file, over);
  CHECK(c.representation == harness::Representation::Continuous);
  CHECK(c.initial_lr == 5e-5);
  CHECK(c.world.classes == 1);
  CHECK(c.hyper.k == 200.0);
  const auto d = config::resolve({}, {{"experiment.representation", "joint-b1"}});
  CHECK(d.representation == harness::Representation::JointB1);
  CHECK(d.initial_lr == 1e-3);
}

TEST_CASE("apply rejects unknown keys and bad values") {
  auto c = harness::ExperimentConfig::defaults(harness::Representation::Discrete);
  CHECK_THROWS_AS(config::apply(c, "loss.kk", "1"), ConfigError);
  CHECK_THROWS_AS(config::apply(c, "loss.k", "abc"), ConfigError);
  CHECK_THROWS_AS(config::apply(c, "model.views", "2.5"), ConfigError);
  CHECK_THROWS_AS(config::apply(c, "data.flip_augmentation", "maybe"), ConfigError);
  CHECK_THROWS_AS(config::apply(c, "model.hidden", "8,0"), ConfigError);
  config::apply(c, "model.views", "2e1");
  CHECK(c.views == 20);
  config::apply(c, "model.hidden", "8, 4");
  CHECK(c.hidden == std::vector<int>{8, 4});
  config::apply(c, "eval.view_criterion", "angular-error");
  CHECK(c.eval.criterion == metrics::ViewCriterion::AngularError);
}

TEST_CASE("write then resolve reproduces the config exactly") {
  auto c = harness::ExperimentConfig::defaults(harness::Representation::JointB2);
  c.hyper.lambda = 0.1 + 0.2;  // not exactly representable in short decimal
  c.hyper.norm = losses::Norm::SquaredL2;
  c.hidden = {7, 3};
  c.seed = 123456789012345ULL;
  c.flip_augmentation = false;
  std::stringstream s;
  config::write(s, c);
  const auto back = config::resolve(config::parse(s), {});
  std::stringstream s2;
  config::write(s2, back);
  CHECK(s.str() == s2.str());
  CHECK(back.hyper.lambda == c.hyper.lambda);
  CHECK(back.seed == c.seed);
  CHECK(back.hidden == c.hidden);
}

TEST_CASE("sweep axes") {
  CHECK(config::key_for_axis("k") == "loss.k");
  CHECK(config::key_for_axis("lambda") == "loss.lambda");
  CHECK(config::key_for_axis("train.momentum") == "train.momentum");
  CHECK(config::key_for_axis("loss.norm").empty());
  CHECK(config::key_for_axis("nope").empty());
  const auto keys = config::numeric_keys();
  CHECK(std::find(keys.begin(), keys.end(), "loss.delta") != keys.end());
  CHECK(std::find(keys.begin(), keys.end(), "experiment.representation") == keys.end());
  for (const auto& a : config::axis_aliases()) CHECK_FALSE(config::key_for_axis(a).empty());
}
