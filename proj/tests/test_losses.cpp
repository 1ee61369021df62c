#include <doctest.h>

#include <cmath>
#include <random>

#include "poselab/error.hpp"
#include "poselab/geometry.hpp"
#include "poselab/losses.hpp"

using namespace poselab;
using namespace poselab::losses;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// Central differences of f at y, step 1e-6.
template <typename F>
VectorXd numeric_grad(F f, VectorXd y) {
  VectorXd g(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double w = y[i], h = 1e-6;
    y[i] = w + h;
    const double fp = f(y);
    y[i] = w - h;
    const double fm = f(y);
    y[i] = w;
    g[i] = (fp - fm) / (2 * h);
  }
  return g;
}

double rel(const VectorXd& a, const VectorXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), 1e-8});
}

}  // namespace

TEST_CASE("softmax examples") {
  CHECK(softmax(vec({0, 0})).isApprox(vec({0.5, 0.5})));
  const VectorXd big = softmax(vec({1000, 1000}));
  CHECK(big.allFinite());
  CHECK(big.isApprox(vec({0.5, 0.5})));
  const VectorXd s = softmax(vec({1, 2, 3}));
  CHECK(s[0] == doctest::Approx(0.09003).epsilon(1e-4));
  CHECK(s[1] == doctest::Approx(0.24473).epsilon(1e-4));
  CHECK(s[2] == doctest::Approx(0.66524).epsilon(1e-4));
  // Oracle: direct exponentials.
  const double z = std::exp(1) + std::exp(2) + std::exp(3);
  CHECK(std::abs(s[2] - std::exp(3) / z) < 1e-15);
}

TEST_CASE("softmax properties") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 5.0);
  for (int i = 0; i < 1000; ++i) {
    VectorXd z(7);
    for (auto& v : z) v = n(rng);
    const VectorXd s = softmax(z);
    CHECK(std::abs(s.sum() - 1.0) < 1e-12);
    CHECK(s.minCoeff() > 0.0);
    CHECK(s.maxCoeff() <= 1.0);
    CHECK((softmax((z.array() + n(rng)).matrix()) - s).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("discrete target layout") {
  const auto bg = DiscreteTarget::background(2, 3);
  CHECK(bg.dimension() == 7);
  CHECK(bg.hot() == 0);
  const auto t = DiscreteTarget::object(2, 3, 2, 1);
  CHECK(t.hot() == 1 + 3 + 0);
  CHECK(t.vector().sum() == 1.0);
  CHECK(t.vector()[t.hot()] == 1.0);
  CHECK(discrete_index(3, 1, 3) == 3);
  CHECK_THROWS_AS(DiscreteTarget::object(2, 3, 3, 1), ConfigError);
  CHECK_THROWS_AS(DiscreteTarget::object(2, 3, 1, 4), ConfigError);
}

TEST_CASE("discrete_nll examples") {
  const auto t = DiscreteTarget::object(2, 2, 1, 2);
  CHECK(discrete_nll(t.vector(), t).value == 0.0);
  const int c = 2 * 2 + 1;
  CHECK(discrete_nll(VectorXd::Constant(c, 1.0 / c), t).value == doctest::Approx(std::log(5.0)));
  const VectorXd logits = vec({1, 0, 0, 0, 0});
  const auto l = discrete_head_loss(logits, DiscreteTarget::background(2, 2));
  CHECK(l.value == doctest::Approx(std::log(std::exp(1.0) + 4.0) - 1.0).epsilon(1e-12));
  CHECK(l.value == doctest::Approx(0.90483).epsilon(1e-5));
  CHECK(l.grad.isApprox(softmax(logits) - DiscreteTarget::background(2, 2).vector()));
}

TEST_CASE("discrete_nll clamps a zero probability") {
  const auto t = DiscreteTarget::object(1, 2, 1, 1);
  const auto l = discrete_nll(vec({1, 0, 0}), t);
  CHECK(std::isfinite(l.value));
  CHECK(l.value == doctest::Approx(-std::log(kLogFloor)));
}

TEST_CASE("discrete_nll is nonnegative, zero only at the target") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int i = 0; i < 500; ++i) {
    VectorXd z(9);
    for (auto& v : z) v = n(rng);
    const auto t = DiscreteTarget::object(2, 4, 1 + i % 2, 1 + i % 4);
    const double v = discrete_head_loss(z, t).value;
    CHECK(v >= 0.0);
    CHECK(v > 0.0);
  }
}

TEST_CASE("circle_loss examples") {
  LossHyper h;
  const auto pos = CircleTarget::positive_at(geometry::Azimuth(0.7));
  const auto l0 = circle_loss(pos.target, pos, h);
  CHECK(l0.value == 0.0);
  CHECK(l0.grad.isZero());
  const auto neg = CircleTarget::negative();
  CHECK(circle_loss(geometry::circle_point(geometry::Azimuth(2.0)), neg, h).value ==
        doctest::Approx(1.0));
  CHECK(circle_loss(Eigen::Vector3d(0, 3, 4), neg, h).value ==
        doctest::Approx(std::exp(-std::sqrt(20.0))).epsilon(1e-12));
  CHECK(std::exp(-std::sqrt(20.0)) == doctest::Approx(0.011432).epsilon(1e-4));
  // Exactly on the circle the repulsive gradient is defined as zero.
  CHECK(circle_loss(Eigen::Vector3d(1, 0, 0), neg, h).grad.isZero());
}

TEST_CASE("circle targets lie on the circle") {
  for (double t : {0.0, 1.0, 3.0, 6.0}) {
    const auto c = CircleTarget::positive_at(geometry::Azimuth(t));
    CHECK(c.positive);
    CHECK(std::abs(c.target.head<2>().norm() - 1.0) < 1e-12);
    CHECK(c.target[2] == 0.0);
  }
}

TEST_CASE("circle_loss gradients match finite differences") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.5);
  for (double delta : {0.25, 0.5, 1.0}) {
    LossHyper h;
    h.delta = delta;
    for (int i = 0; i < 200; ++i) {
      const Eigen::Vector3d y(n(rng), n(rng), n(rng));
      for (const auto& t : {CircleTarget::negative(),
                            CircleTarget::positive_at(geometry::Azimuth(n(rng)))}) {
        const auto l = circle_loss(y, t, h);
        const auto g = numeric_grad(
            [&](const VectorXd& v) { return circle_loss(v, t, h).value; }, VectorXd(y));
        CHECK(rel(l.grad, g) < 1e-5);
      }
    }
  }
}

TEST_CASE("negative branch decreases with distance; positive branch has a unique minimum") {
  LossHyper h;
  const auto neg = CircleTarget::negative();
  double prev = 2.0;
  for (double d = 0.0; d < 10.0; d += 0.05) {
    const double v = circle_loss(Eigen::Vector3d(1.0 + d, 0, 0), neg, h).value;
    CHECK(v < prev);
    prev = v;
  }
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  const auto pos = CircleTarget::positive_at(geometry::Azimuth(1.1));
  for (int i = 0; i < 500; ++i) {
    const Eigen::Vector3d y = pos.target + Eigen::Vector3d(n(rng), n(rng), n(rng)) * 1e-3;
    CHECK(circle_loss(y, pos, h).value > 0.0);
  }
}

TEST_CASE("joint target layout") {
  const auto a = JointTarget::make(JointVariant::A, 3, 2, geometry::Azimuth(0.5));
  CHECK(a.t_pose.size() == 2);
  CHECK(a.t_pose[0] == doctest::Approx(std::cos(0.5)));
  CHECK(a.t_class.sum() == 1.0);
  CHECK(a.t_class[2] == 1.0);
  const auto b = JointTarget::make(JointVariant::B2, 3, 2, geometry::Azimuth(0.5));
  CHECK(b.t_pose.size() == 6);
  CHECK(b.t_pose.segment(2, 2).isApprox(Eigen::Vector2d(std::cos(0.5), std::sin(0.5))));
  CHECK(b.t_pose.head(2).isZero());
  CHECK(b.t_pose.tail(2).isZero());
  const auto bg = JointTarget::make(JointVariant::B1, 3, 0, geometry::Azimuth(0.5));
  CHECK(bg.t_pose.isZero());
  CHECK(bg.t_class[0] == 1.0);
}

TEST_CASE("norm semantics") {
  const VectorXd d = vec({3, -4});
  CHECK(norm_loss(d, Norm::L1).value == 7.0);
  CHECK(norm_loss(d, Norm::L2).value == 5.0);
  CHECK(norm_loss(d, Norm::SquaredL2).value == 25.0);
  CHECK(norm_loss(vec({0, 2}), Norm::L1).grad == vec({0, 1}));
  CHECK(norm_loss(vec({0, 0}), Norm::L2).grad.isZero());
}

TEST_CASE("joint_loss examples") {
  LossHyper h;
  h.lambda = 0.0;
  const auto t = JointTarget::make(JointVariant::A, 2, 1, geometry::Azimuth(0.3));
  for (const VectorXd& yc : {vec({5, -1, 2}), vec({0, 0, 0})}) {
    const auto l = joint_loss(yc, t.t_pose, t, h);
    CHECK(l.value == 0.0);
    CHECK(l.grad_class.isZero());
  }

  LossHyper l1;
  l1.norm = Norm::L1;
  const VectorXd y_pose = vec({0.6, 0.8, 9, 9});
  const auto b2 = JointTarget::make(JointVariant::B2, 2, 1, geometry::Azimuth(0.0));
  CHECK(joint_pose_loss(y_pose, b2, Norm::L1).value == doctest::Approx(1.2));
  const auto b1 = JointTarget::make(JointVariant::B1, 2, 1, geometry::Azimuth(0.0));
  CHECK(b1.t_pose == vec({1, 0, 0, 0}));
  CHECK(joint_pose_loss(y_pose, b1, Norm::L1).value == doctest::Approx(19.2));
}

TEST_CASE("joint_loss pose participation per variant") {
  const VectorXd yc = vec({0.1, 0.2, 0.3});
  const VectorXd y2 = vec({0.3, -0.2});
  const VectorXd y4 = vec({0.3, -0.2, 0.5, 0.9});
  LossHyper h;
  bool active = true;
  const auto na = JointTarget::make(JointVariant::A, 2, 0, geometry::Azimuth(0.0));
  CHECK(joint_pose_loss(y2, na, Norm::L1, &active).value == 0.0);
  CHECK_FALSE(active);
  const auto nb2 = JointTarget::make(JointVariant::B2, 2, 0, geometry::Azimuth(0.0));
  CHECK(joint_pose_loss(y4, nb2, Norm::L1, &active).grad.isZero());
  CHECK_FALSE(active);
  const auto nb1 = JointTarget::make(JointVariant::B1, 2, 0, geometry::Azimuth(0.0));
  CHECK(joint_pose_loss(y4, nb1, Norm::L1, &active).value == doctest::Approx(1.9));
  CHECK(active);
  CHECK_THROWS_AS(joint_loss(yc, y2, nb1, h), ConfigError);
  CHECK_THROWS_AS(joint_loss(vec({1, 2}), y4, nb1, h), ConfigError);
}

TEST_CASE("joint_loss equals lambda * class + pose, terms evaluated separately") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  for (auto variant : {JointVariant::A, JointVariant::B1, JointVariant::B2}) {
    for (auto norm : {Norm::L1, Norm::L2, Norm::SquaredL2}) {
      for (double lambda : {0.0, 1.0, 10.0}) {
        LossHyper h;
        h.lambda = lambda;
        h.norm = norm;
        const int cls = static_cast<int>(rng() % 4);
        const auto t = JointTarget::make(variant, 3, cls, geometry::Azimuth(n(rng)));
        VectorXd yc(4), yp(pose_dimension(variant, 3));
        for (auto& v : yc) v = n(rng);
        for (auto& v : yp) v = n(rng);
        const auto l = joint_loss(yc, yp, t, h);
        const auto ct = discrete_head_loss(
            yc, cls == 0 ? DiscreteTarget::background(3, 1) : DiscreteTarget::object(3, 1, cls, 1));
        const double pose = joint_pose_loss(yp, t, norm).value;
        CHECK(l.value == lambda * ct.value + pose);
        CHECK(l.class_term == ct.value);
        CHECK(l.pose_term == pose);
      }
    }
  }
}

TEST_CASE("lambda = 0 makes the joint loss independent of the class logits") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n;
  LossHyper h;
  h.lambda = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto t = JointTarget::make(JointVariant::B2, 3, 1 + i % 3, geometry::Azimuth(n(rng)));
    VectorXd yp(6), yc1(4), yc2(4);
    for (auto& v : yp) v = n(rng);
    for (auto& v : yc1) v = n(rng);
    for (auto& v : yc2) v = 10 * n(rng);
    const auto a = joint_loss(yc1, yp, t, h), b = joint_loss(yc2, yp, t, h);
    CHECK(a.value == b.value);
    CHECK(a.grad_pose == b.grad_pose);
    CHECK(a.grad_class.isZero());
    CHECK(b.grad_class.isZero());
  }
}

TEST_CASE("B2 ignores other classes' pose coordinates; B1 does not") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n;
  for (int i = 0; i < 100; ++i) {
    const int cls = 1 + i % 3;
    const geometry::Azimuth th(n(rng));
    VectorXd yp(6);
    for (auto& v : yp) v = n(rng);
    VectorXd perturbed = yp;
    for (int c = 1; c <= 3; ++c)
      if (c != cls) perturbed.segment(2 * (c - 1), 2) += Eigen::Vector2d(n(rng), n(rng));
    const auto b2 = JointTarget::make(JointVariant::B2, 3, cls, th);
    const auto b1 = JointTarget::make(JointVariant::B1, 3, cls, th);
    CHECK(joint_pose_loss(yp, b2, Norm::L1).value == joint_pose_loss(perturbed, b2, Norm::L1).value);
    CHECK(joint_pose_loss(yp, b1, Norm::L1).value != joint_pose_loss(perturbed, b1, Norm::L1).value);
  }
}

TEST_CASE("joint and discrete gradients match finite differences away from kinks") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n;
  int checked = 0;
  for (auto variant : {JointVariant::A, JointVariant::B1, JointVariant::B2}) {
    for (auto norm : {Norm::L1, Norm::L2, Norm::SquaredL2}) {
      LossHyper h;
      h.norm = norm;
      for (int i = 0; i < 60; ++i) {
        const auto t = JointTarget::make(variant, 3, static_cast<int>(rng() % 4),
                                         geometry::Azimuth(n(rng)));
        VectorXd yc(4), yp(pose_dimension(variant, 3));
        for (auto& v : yc) v = n(rng);
        for (auto& v : yp) v = n(rng);
        if ((yp - t.t_pose).cwiseAbs().minCoeff() < 1e-3) continue;
        const auto l = joint_loss(yc, yp, t, h);
        const auto gc = numeric_grad([&](const VectorXd& v) { return joint_loss(v, yp, t, h).value; }, yc);
        const auto gp = numeric_grad([&](const VectorXd& v) { return joint_loss(yc, v, t, h).value; }, yp);
        CHECK(rel(l.grad_class, gc) < 1e-5);
        CHECK(rel(l.grad_pose, gp) < 1e-5);
        ++checked;
      }
    }
  }
  CHECK(checked > 400);
  for (int i = 0; i < 100; ++i) {
    VectorXd z(13);
    for (auto& v : z) v = 2 * n(rng);
    const auto t = DiscreteTarget::object(3, 4, 1 + i % 3, 1 + i % 4);
    const auto g = numeric_grad([&](const VectorXd& v) { return discrete_head_loss(v, t).value; }, z);
    CHECK(rel(discrete_head_loss(z, t).grad, g) < 1e-5);
  }
}

TEST_CASE("hyperparameter validation") {
  LossHyper h;
  CHECK_NOTHROW(h.validate());
  h.k = 0;
  CHECK_THROWS_AS(h.validate(), ConfigError);
  h = {};
  h.delta = -1;
  CHECK_THROWS_AS(h.validate(), ConfigError);
  h = {};
  h.lambda = -0.1;
  CHECK_THROWS_AS(h.validate(), ConfigError);
}
