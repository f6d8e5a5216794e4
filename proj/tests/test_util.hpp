#pragma once

#include <Eigen/Dense>

#include "activepose/geometry.hpp"
#include "activepose/random.hpp"

namespace activepose::testutil {

inline Pose random_pose(RandomStream& rng, double translation_span = 1.0) {
  Pose p;
  p.rotation = rng.random_rotation();
  p.translation = translation_span * rng.gaussian_vec3();
  return p;
}

inline Eigen::Matrix4d to_homogeneous(const Pose& p) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = p.rotation;
  m.topRightCorner<3, 1>() = p.translation;
  return m;
}

inline double pose_diff(const Pose& a, const Pose& b) {
  return std::max((a.rotation - b.rotation).cwiseAbs().maxCoeff(),
                  (a.translation - b.translation).cwiseAbs().maxCoeff());
}

inline double matrix_diff(const Eigen::Matrix4d& a, const Eigen::Matrix4d& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace activepose::testutil
