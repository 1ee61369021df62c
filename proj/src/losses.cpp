#include "poselab/losses.hpp"

#include <cmath>
#include <string>

#include "poselab/error.hpp"

namespace poselab::losses {

void LossHyper::validate() const {
  if (!(k > 0.0)) throw ConfigError("K must be positive");
  if (!(delta > 0.0)) throw ConfigError("delta must be positive");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
}

Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& logits) {
  if (logits.size() == 0) return {};
  const Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

Eigen::Index discrete_index(int views, int class_id, int bin) {
  return 1 + Eigen::Index{class_id - 1} * views + (bin - 1);
}

DiscreteTarget DiscreteTarget::background(int classes, int views) {
  if (classes < 1 || views < 1) throw ConfigError("discrete target needs N >= 1 and P >= 1");
  return {classes, views, 0};
}

DiscreteTarget DiscreteTarget::object(int classes, int views, int class_id, int bin) {
  if (classes < 1 || views < 1) throw ConfigError("discrete target needs N >= 1 and P >= 1");
  if (class_id < 1 || class_id > classes || bin < 1 || bin > views) {
    throw ConfigError("discrete target (class " + std::to_string(class_id) + ", bin " +
                      std::to_string(bin) + ") out of range");
  }
  return {classes, views, discrete_index(views, class_id, bin)};
}

Eigen::VectorXd DiscreteTarget::vector() const {
  Eigen::VectorXd t = Eigen::VectorXd::Zero(dimension());
  t[hot_] = 1.0;
  return t;
}

LossValue discrete_nll(const Eigen::Ref<const Eigen::VectorXd>& probs, const DiscreteTarget& t) {
  if (probs.size() != t.dimension()) {
    throw ShapeError("discrete_nll: prediction has " + std::to_string(probs.size()) +
                     " coordinates, target has " + std::to_string(t.dimension()));
  }
  LossValue out;
  out.value = -std::log(std::max(probs[t.hot()], kLogFloor));
  out.grad = probs;
  out.grad[t.hot()] -= 1.0;
  return out;
}

LossValue discrete_head_loss(const Eigen::Ref<const Eigen::VectorXd>& logits,
                             const DiscreteTarget& t) {
  return discrete_nll(softmax(logits), t);
}

CircleTarget CircleTarget::positive_at(geometry::Azimuth theta) {
  return {geometry::circle_point(theta), true};
}

CircleTarget CircleTarget::negative() { return {Eigen::Vector3d::Zero(), false}; }

LossValue circle_loss(const Eigen::Ref<const Eigen::VectorXd>& y, const CircleTarget& t,
                      const LossHyper& hyper) {
  if (y.size() != 3) throw ShapeError("circle_loss: output must be 3-dimensional");
  if (!(hyper.delta > 0.0)) throw ConfigError("delta must be positive");
  LossValue out;
  if (t.positive) {
    const Eigen::Vector3d d = y - t.target;
    out.value = d.squaredNorm();
    out.grad = 2.0 * d;
    return out;
  }
  const Eigen::Vector3d v = y;
  const double dist = geometry::distance_to_circle(v);
  out.value = std::exp(-dist / hyper.delta);
  out.grad = Eigen::VectorXd::Zero(3);
  if (dist == 0.0) return out;

  Eigen::Vector3d ddist;
  const double r2 = v.x() * v.x() + v.y() * v.y();
  if (r2 < 1e-30) {
    ddist = (v - Eigen::Vector3d(1.0, 0.0, 0.0)) / dist;
  } else {
    const double r = std::sqrt(r2);
    const double radial = (r - 1.0) / (dist * r);
    ddist = {radial * v.x(), radial * v.y(), v.z() / dist};
  }
  out.grad = (-out.value / hyper.delta) * ddist;
  return out;
}

Eigen::Index pose_dimension(JointVariant variant, int classes) {
  return variant == JointVariant::A ? 2 : 2 * Eigen::Index{classes};
}

JointTarget JointTarget::make(JointVariant variant, int classes, int class_index,
                              geometry::Azimuth theta) {
  if (classes < 1) throw ConfigError("joint target needs at least one class");
  if (class_index < 0 || class_index > classes)
    throw ConfigError("joint target class " + std::to_string(class_index) + " out of range");
  JointTarget t;
  t.variant = variant;
  t.class_index = class_index;
  t.t_class = Eigen::VectorXd::Zero(classes + 1);
  t.t_class[class_index] = 1.0;
  t.t_pose = Eigen::VectorXd::Zero(pose_dimension(variant, classes));
  if (class_index > 0) {
    const Eigen::Index at = variant == JointVariant::A ? 0 : 2 * Eigen::Index{class_index - 1};
    t.t_pose[at] = std::cos(theta.radians());
    t.t_pose[at + 1] = std::sin(theta.radians());
  }
  return t;
}

LossValue norm_loss(const Eigen::Ref<const Eigen::VectorXd>& d, Norm norm) {
  LossValue out;
  switch (norm) {
    case Norm::L1:
      out.value = d.lpNorm<1>();
      out.grad = d.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
      break;
    case Norm::L2: {
      const double n = d.norm();
      out.value = n;
      out.grad = n > 0.0 ? Eigen::VectorXd(d / n) : Eigen::VectorXd::Zero(d.size());
      break;
    }
    case Norm::SquaredL2:
      out.value = d.squaredNorm();
      out.grad = 2.0 * d;
      break;
  }
  return out;
}

LossValue joint_pose_loss(const Eigen::Ref<const Eigen::VectorXd>& y_pose, const JointTarget& t,
                          Norm norm, bool* active) {
  if (y_pose.size() != t.t_pose.size()) {
    throw ConfigError("joint loss: pose output has " + std::to_string(y_pose.size()) +
                      " coordinates but the variant expects " + std::to_string(t.t_pose.size()));
  }
  LossValue out;
  out.grad = Eigen::VectorXd::Zero(y_pose.size());
  bool carries = false;
  switch (t.variant) {
    case JointVariant::A:
    case JointVariant::B2:
      if (t.class_index > 0) {
        const Eigen::Index at =
            t.variant == JointVariant::A ? 0 : 2 * Eigen::Index{t.class_index - 1};
        const LossValue pair = norm_loss(y_pose.segment(at, 2) - t.t_pose.segment(at, 2), norm);
        out.value = pair.value;
        out.grad.segment(at, 2) = pair.grad;
        carries = true;
      }
      break;
    case JointVariant::B1:
      out = norm_loss(y_pose - t.t_pose, norm);
      carries = true;
      break;
  }
  if (active) *active = carries;
  return out;
}

JointLossValue joint_loss(const Eigen::Ref<const Eigen::VectorXd>& y_class,
                          const Eigen::Ref<const Eigen::VectorXd>& y_pose, const JointTarget& t,
                          const LossHyper& hyper) {
  if (y_class.size() != t.t_class.size()) {
    throw ConfigError("joint loss: class output has " + std::to_string(y_class.size()) +
                      " coordinates, expected " + std::to_string(t.t_class.size()));
  }
  JointLossValue out;
  // A one-view discrete target is exactly the (N + 1)-way class one-hot.
  const auto class_target = t.class_index == 0
                                ? DiscreteTarget::background(t.classes(), 1)
                                : DiscreteTarget::object(t.classes(), 1, t.class_index, 1);
  const LossValue c = discrete_head_loss(y_class, class_target);
  const LossValue pose = joint_pose_loss(y_pose, t, hyper.norm, &out.pose_active);
  out.class_term = c.value;
  out.pose_term = pose.value;
  out.value = hyper.lambda * c.value + pose.value;
  out.grad_class = hyper.lambda * c.grad;
  out.grad_pose = pose.grad;
  return out;
}

}  // namespace poselab::losses
