#include "activepose/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace activepose {

bool Pose::is_valid(double tol) const {
  if (!translation.allFinite() || !rotation.allFinite()) return false;
  const Eigen::Matrix3d residual = rotation.transpose() * rotation - Eigen::Matrix3d::Identity();
  if (residual.cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation.determinant() - 1.0) <= 10.0 * tol;
}

Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  return out;
}

Pose invert(const Pose& p) {
  Pose out;
  out.rotation = p.rotation.transpose();
  out.translation = -(out.rotation * p.translation);
  return out;
}

Pose object_in_base(const Pose& oTc, const Pose& eTb, const Pose& eTc) {
  const Pose cTo = invert(oTc);
  const Pose bTe = invert(eTb);
  return compose(compose(bTe, eTc), cTo);
}

double geodesic_rotation_distance(const Eigen::Matrix3d& ra, const Eigen::Matrix3d& rb) {
  const double tr = (ra.transpose() * rb).trace();
  const double c = std::clamp((tr - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

double geodesic_rotation_distance(const Pose& a, const Pose& b) {
  return geodesic_rotation_distance(a.rotation, b.rotation);
}

Rot6D rot6d_from_rotation(const Eigen::Matrix3d& r) {
  Rot6D out;
  out.v = {r(0, 0), r(1, 0), r(2, 0), r(0, 1), r(1, 1), r(2, 1)};
  return out;
}

Eigen::Matrix3d rotation_from_rot6d(const Rot6D& v) {
  const Eigen::Vector3d a1(v.v[0], v.v[1], v.v[2]);
  const Eigen::Vector3d a2(v.v[3], v.v[4], v.v[5]);
  const double n1 = a1.norm();
  if (n1 < 1e-8) throw DegenerateRotation("rot6d: first column norm below 1e-8");
  const Eigen::Vector3d b1 = a1 / n1;
  const Eigen::Vector3d r2 = a2 - b1.dot(a2) * b1;
  const double n2 = r2.norm();
  if (n2 < 1e-8) throw DegenerateRotation("rot6d: second column parallel or near-zero");
  const Eigen::Vector3d b2 = r2 / n2;
  Eigen::Matrix3d r;
  r.col(0) = b1;
  r.col(1) = b2;
  r.col(2) = b1.cross(b2);
  return r;
}

bool in_frustum(const Pose& camera, const CameraIntrinsics& intrinsics,
                const Eigen::Vector3d& point_world) {
  const Eigen::Vector3d p = invert(camera).apply(point_world);
  const double z = p.z();
  if (z < intrinsics.near_clip || z > intrinsics.far_clip) return false;
  const double u = intrinsics.fx * p.x() / z + intrinsics.cx;
  const double v = intrinsics.fy * p.y() / z + intrinsics.cy;
  return u >= 0.0 && u <= intrinsics.width && v >= 0.0 && v <= intrinsics.height;
}

Pose camera_look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target) {
  const Eigen::Vector3d forward = (target - eye).normalized();
  Eigen::Vector3d up_ref = Eigen::Vector3d::UnitZ();
  if (std::abs(forward.dot(up_ref)) > 1.0 - 1e-9) {
    up_ref = forward.z() > 0 ? Eigen::Vector3d(Eigen::Vector3d::UnitX())
                             : Eigen::Vector3d(-Eigen::Vector3d::UnitX());
  }
  const Eigen::Vector3d x_cam = up_ref.cross(forward).normalized();
  const Eigen::Vector3d y_cam = forward.cross(x_cam);
  Pose p;
  p.rotation.col(0) = x_cam;
  p.rotation.col(1) = y_cam;
  p.rotation.col(2) = forward;
  p.translation = eye;
  return p;
}

Eigen::Matrix3d rotation_about_axis(const Eigen::Vector3d& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

Eigen::Matrix3d project_to_rotation(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d u = svd.matrixU();
  const Eigen::Matrix3d v = svd.matrixV();
  Eigen::Vector3d d(1.0, 1.0, (u * v.transpose()).determinant());
  return u * d.asDiagonal() * v.transpose();
}

std::array<double, 7> pose_to_seven(const Pose& p) {
  Eigen::Quaterniond q(p.rotation);
  q.normalize();
  if (q.w() < 0) q.coeffs() = -q.coeffs();
  return {p.translation.x(), p.translation.y(), p.translation.z(), q.w(), q.x(), q.y(), q.z()};
}

Pose pose_from_seven(const std::array<double, 7>& v) {
  Eigen::Quaterniond q(v[3], v[4], v[5], v[6]);
  const double n = q.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::invalid_argument("pose_from_seven: quaternion norm is zero or non-finite");
  }
  q.normalize();
  Pose p;
  p.rotation = q.toRotationMatrix();
  p.translation = {v[0], v[1], v[2]};
  return p;
}

}  // namespace activepose
