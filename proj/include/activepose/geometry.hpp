#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <array>
#include <stdexcept>
#include <vector>

namespace activepose {

/// Rigid SE(3) transform. Rotations are stored as matrices; quaternions
/// appear only at serialization boundaries. Units: meters, radians.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose identity() { return {}; }

  /// Maps a point: R p + t.
  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }

  /// Orthonormal with det +1 and finite translation, within tol.
  bool is_valid(double tol = 1e-9) const;
};

/// applies b then a: (a ∘ b)(x) = a.R (b.R x + b.t) + a.t
Pose compose(const Pose& a, const Pose& b);

Pose invert(const Pose& p);

/// Object pose in the robot base frame from the camera-frame observation:
/// cTo = inv(oTc), bTe = inv(eTb), result = bTe * eTc * cTo.
Pose object_in_base(const Pose& oTc, const Pose& eTb, const Pose& eTc);

/// arccos((trace(Ra' Rb) - 1) / 2), clamped to [0, pi].
double geodesic_rotation_distance(const Pose& a, const Pose& b);
double geodesic_rotation_distance(const Eigen::Matrix3d& ra, const Eigen::Matrix3d& rb);

/// Continuous 6D rotation encoding: the first two columns of a rotation
/// matrix, column-major (r00 r10 r20 r01 r11 r21).
struct Rot6D {
  std::array<double, 6> v{1, 0, 0, 0, 1, 0};
};

struct DegenerateRotation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Rot6D rot6d_from_rotation(const Eigen::Matrix3d& r);

/// Gram-Schmidt decode: normalize column 1, orthonormalize column 2,
/// column 3 = cross product. Throws DegenerateRotation when either column
/// collapses below 1e-8 (parallel or near-zero input).
Eigen::Matrix3d rotation_from_rot6d(const Rot6D& v);

/// Pinhole camera, z forward, pixel coordinates u = fx x/z + cx, v = fy y/z + cy.
struct CameraIntrinsics {
  double fx = 525.0, fy = 525.0;
  double cx = 320.0, cy = 240.0;
  double width = 640.0, height = 480.0;
  double near_clip = 0.05, far_clip = 2.0;

  bool is_valid() const {
    return fx > 0 && fy > 0 && cx > 0 && cy > 0 && width > 0 && height > 0 &&
           near_clip > 0 && far_clip > 0 && near_clip < far_clip;
  }
};

/// True iff the world point projects inside the image rectangle (borders
/// inclusive) with depth in [near_clip, far_clip]. `camera` is the
/// camera-to-world pose.
bool in_frustum(const Pose& camera, const CameraIntrinsics& intrinsics,
                const Eigen::Vector3d& point_world);

/// Camera-to-world pose at `eye` with the optical axis (+z) through `target`.
/// Up convention: world +z projected onto the image plane, with a ±x fallback
/// when looking along ±z.
Pose camera_look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target);

Eigen::Matrix3d rotation_about_axis(const Eigen::Vector3d& axis, double angle);

/// Nearest rotation matrix in the Frobenius sense (SVD projection).
Eigen::Matrix3d project_to_rotation(const Eigen::Matrix3d& m);

/// Wire form used by every file format: [tx ty tz qw qx qy qz], unit
/// quaternion with qw >= 0.
std::array<double, 7> pose_to_seven(const Pose& p);
Pose pose_from_seven(const std::array<double, 7>& v);

constexpr double deg_to_rad(double deg) { return deg * M_PI / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / M_PI; }

}  // namespace activepose
