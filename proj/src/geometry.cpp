#include "poselab/geometry.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "poselab/error.hpp"

namespace poselab::geometry {

namespace {

constexpr double kDegenerateRadiusSq = 1e-30;
// Points whose planar norm is this close to 1 (and z == 0) are already on the
// circle; returning them untouched makes projection exactly idempotent.
constexpr double kOnCircleSlack = 8.0 * std::numeric_limits<double>::epsilon();

}  // namespace

double canonical(double theta) {
  double r = std::fmod(theta, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  // fmod of a tiny negative number plus 2*pi can round up to 2*pi itself.
  if (r >= kTwoPi) r = 0.0;
  return r;
}

Eigen::Vector3d project_to_circle(const Eigen::Vector3d& y) {
  const double r2 = y.x() * y.x() + y.y() * y.y();
  if (r2 < kDegenerateRadiusSq) return {1.0, 0.0, 0.0};
  const double r = std::hypot(y.x(), y.y());
  if (y.z() == 0.0 && std::abs(r - 1.0) <= kOnCircleSlack) return {y.x(), y.y(), 0.0};
  return {y.x() / r, y.y() / r, 0.0};
}

double distance_to_circle(const Eigen::Vector3d& y) {
  const double r2 = y.x() * y.x() + y.y() * y.y();
  if (r2 < kDegenerateRadiusSq) return (y - Eigen::Vector3d(1.0, 0.0, 0.0)).norm();
  return std::hypot(std::sqrt(r2) - 1.0, y.z());
}

Azimuth angle_from_feature(const Eigen::Ref<const Eigen::VectorXd>& y,
                           std::pair<Eigen::Index, Eigen::Index> pair) {
  const auto [c, s] = pair;
  if (c < 0 || s < 0 || c >= y.size() || s >= y.size()) {
    throw ShapeError("angle_from_feature: coordinate pair (" + std::to_string(c) + ", " +
                     std::to_string(s) + ") outside vector of size " + std::to_string(y.size()));
  }
  if (y[c] == 0.0 && y[s] == 0.0) return Azimuth(0.0);
  return Azimuth(std::atan2(y[s], y[c]));
}

double angular_distance(Azimuth a, Azimuth b) {
  const double d = std::abs(a.radians() - b.radians());
  return std::min(d, kTwoPi - d);
}

BinIndex discretize(Azimuth theta, int views) {
  if (views < 2) {
    throw ConfigError("invalid bin count " + std::to_string(views) + " (need at least 2)");
  }
  const double width = kTwoPi / views;
  // Shift by half a bin so that bin 1 spans [-width/2, width/2).
  const double shifted = canonical(theta.radians() + 0.5 * width);
  int j = static_cast<int>(std::floor(shifted / width));
  if (j >= views) j = views - 1;
  return {j + 1, views};
}

Azimuth bin_center(BinIndex bin) {
  if (bin.bin_count < 2 || bin.index < 1 || bin.index > bin.bin_count) {
    throw ConfigError("invalid bin " + std::to_string(bin.index) + " of " +
                      std::to_string(bin.bin_count));
  }
  return Azimuth((bin.index - 1) * (kTwoPi / bin.bin_count));
}

Eigen::Vector3d circle_point(Azimuth theta) {
  return {std::cos(theta.radians()), std::sin(theta.radians()), 0.0};
}

}  // namespace poselab::geometry
