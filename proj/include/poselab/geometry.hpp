#pragma once

// Angle arithmetic on the azimuth circle and the unit circle embedded in R^3
// that continuous heads regress onto.

#include <numbers>
#include <utility>

#include <Eigen/Core>

namespace poselab::geometry {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wrap an angle into [0, 2*pi). Idempotent.
double canonical(double theta);

/// Azimuth in radians, always stored canonicalized.
class Azimuth {
 public:
  Azimuth() = default;
  explicit Azimuth(double theta) : theta_(canonical(theta)) {}

  double radians() const noexcept { return theta_; }

  friend bool operator==(const Azimuth&, const Azimuth&) = default;

 private:
  double theta_ = 0.0;
};

/// One of P orientation bins, 1-based. Bins are centred on multiples of 2*pi/P,
/// bin 1 centred at azimuth 0.
struct BinIndex {
  int index = 1;
  int bin_count = 2;

  friend bool operator==(const BinIndex&, const BinIndex&) = default;
};

/// Euclidean nearest point of {(cos t, sin t, 0)}. Inputs with y1^2 + y2^2 < 1e-30
/// map to (1, 0, 0).
Eigen::Vector3d project_to_circle(const Eigen::Vector3d& y);

/// Distance from y to its projection on the circle.
double distance_to_circle(const Eigen::Vector3d& y);

/// Angle of the coordinate pair (cosine, sine) = (y[pair.first], y[pair.second]).
/// A zero pair yields 0.
Azimuth angle_from_feature(const Eigen::Ref<const Eigen::VectorXd>& y,
                           std::pair<Eigen::Index, Eigen::Index> pair = {0, 1});

/// Shortest arc between two azimuths, in [0, pi].
double angular_distance(Azimuth a, Azimuth b);

/// Throws ConfigError when views < 2.
BinIndex discretize(Azimuth theta, int views);

Azimuth bin_center(BinIndex bin);

/// (cos t, sin t, 0)
Eigen::Vector3d circle_point(Azimuth theta);

}  // namespace poselab::geometry
