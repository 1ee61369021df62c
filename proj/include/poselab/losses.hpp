#pragma once

// Per-sample losses of the four output representations, each returning the
// value and its gradient w.r.t. the raw network output.

#include <Eigen/Core>

#include "poselab/geometry.hpp"

namespace poselab::losses {

enum class Norm { L1, L2, SquaredL2 };

/// Pose layout of the joint heads: a shared 2-d pose (A), or one (cos, sin) pair
/// per class penalized in full (B1) or only on the true class pair (B2).
enum class JointVariant { A, B1, B2 };

struct LossHyper {
  double k = 640.0;     // weight of the repulsive (negative) term
  double delta = 1.0;   // repulsion length scale
  double lambda = 10.0; // classification weight in joint heads
  Norm norm = Norm::L1;

  void validate() const;
};

struct LossValue {
  double value = 0.0;
  Eigen::VectorXd grad;
};

/// Max-subtracted softmax.
Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& logits);

/// One-hot over (background, class 1 bin 1, ..., class N bin P).
class DiscreteTarget {
 public:
  static DiscreteTarget background(int classes, int views);
  /// class_id in [1, N], bin in [1, P].
  static DiscreteTarget object(int classes, int views, int class_id, int bin);

  int classes() const { return classes_; }
  int views() const { return views_; }
  Eigen::Index dimension() const { return Eigen::Index{classes_} * views_ + 1; }
  Eigen::Index hot() const { return hot_; }
  Eigen::VectorXd vector() const;

 private:
  DiscreteTarget(int classes, int views, Eigen::Index hot)
      : classes_(classes), views_(views), hot_(hot) {}
  int classes_;
  int views_;
  Eigen::Index hot_;
};

/// Index of (class, bin) in the discrete output vector; 0 is background.
Eigen::Index discrete_index(int views, int class_id, int bin);

/// Probabilities are floored at this value inside the logarithm.
inline constexpr double kLogFloor = 1e-12;

/// -log probs[hot]. The gradient is taken w.r.t. the pre-softmax logits: probs - t.
LossValue discrete_nll(const Eigen::Ref<const Eigen::VectorXd>& probs, const DiscreteTarget& t);

/// softmax followed by discrete_nll.
LossValue discrete_head_loss(const Eigen::Ref<const Eigen::VectorXd>& logits,
                             const DiscreteTarget& t);

struct CircleTarget {
  Eigen::Vector3d target = Eigen::Vector3d::Zero();
  bool positive = false;

  static CircleTarget positive_at(geometry::Azimuth theta);
  static CircleTarget negative();
};

/// Positive: ||y - t||^2. Negative: exp(-||y - pi(y)|| / delta).
/// The K weight and the per-set averaging are applied by the batch objective.
LossValue circle_loss(const Eigen::Ref<const Eigen::VectorXd>& y, const CircleTarget& t,
                      const LossHyper& hyper);

struct JointTarget {
  Eigen::VectorXd t_class;  // one-hot, N + 1
  Eigen::VectorXd t_pose;   // 2 (A) or 2N (B1, B2)
  JointVariant variant = JointVariant::A;
  int class_index = 0;      // 0 = background

  static JointTarget make(JointVariant variant, int classes, int class_index,
                          geometry::Azimuth theta);
  int classes() const { return static_cast<int>(t_class.size()) - 1; }
};

Eigen::Index pose_dimension(JointVariant variant, int classes);

/// Norm of d under `norm` and its (sub)gradient; kinks get subgradient 0.
LossValue norm_loss(const Eigen::Ref<const Eigen::VectorXd>& d, Norm norm);

struct JointLossValue {
  double value = 0.0;       // lambda * class_term + pose_term
  double class_term = 0.0;  // unweighted NLL
  double pose_term = 0.0;
  bool pose_active = false; // whether this sample carries a pose term
  Eigen::VectorXd grad_class;
  Eigen::VectorXd grad_pose;
};

/// lambda * NLL(softmax(y_class), t_class) + E_pose. E_pose is the `hyper.norm`
/// distance of
///   A:  y_pose to (cos, sin) for positives; nothing for negatives,
///   B1: the full 2N vector to t_pose, for every sample (zeros for background),
///   B2: the true class pair to (cos, sin) for positives; nothing for negatives.
LossValue joint_pose_loss(const Eigen::Ref<const Eigen::VectorXd>& y_pose, const JointTarget& t,
                          Norm norm, bool* active = nullptr);
JointLossValue joint_loss(const Eigen::Ref<const Eigen::VectorXd>& y_class,
                          const Eigen::Ref<const Eigen::VectorXd>& y_pose, const JointTarget& t,
                          const LossHyper& hyper);

}  // namespace poselab::losses
