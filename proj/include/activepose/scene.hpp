#pragma once

#include "activepose/geometry.hpp"

#include <string>
#include <vector>

namespace activepose {

/// Feature point that breaks an object's symmetry when seen. Position and
/// normal are in the object frame.
struct DistinguishingFeature {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::UnitX();
  int id = 0;
};

/// Abstract object: a finite symmetry group plus the feature points that
/// distinguish its orientations. No mesh; the ambiguity phenomenon only
/// needs symmetry and feature visibility.
struct ObjectModel {
  std::string name;
  std::vector<Eigen::Matrix3d> symmetry_group;  // closed, contains identity
  std::vector<DistinguishingFeature> features;
  double bounding_radius = 0.05;

  /// Throws std::invalid_argument on any violated invariant: group not closed
  /// under composition/inverse (tol 1e-6), identity missing, non-unit feature
  /// normals, or features outside the bounding radius.
  void validate() const;
};

/// Spherical blocker active on a time interval. Blocks a sightline when its
/// center passes within `radius` of the camera-to-target segment.
struct OccluderDisk {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 0.05;
  double t0 = 0.0, t1 = 0.0;

  bool active_at(double time) const { return time >= t0 && time <= t1; }
  bool blocks(const Eigen::Vector3d& from, const Eigen::Vector3d& to, double time) const;
};

/// What one camera sees: the stand-in for a rendered image.
struct ViewDescriptor {
  Pose camera;                           // camera-to-world
  std::vector<int> visible_feature_ids;  // sorted ascending
  Pose object_in_camera;                 // cTo
  bool occluder_active = false;          // some occluder interval covers this time
  bool object_in_view = true;            // unoccluded center in frustum, or any visible feature
};

/// n camera poses on a Fibonacci-spiral sphere around `center`, each looking
/// at `center` (optical axis through it at distance `radius`).
std::vector<Pose> sample_view_sphere(int n, double radius, const Eigen::Vector3d& center);

ViewDescriptor render_descriptor(const ObjectModel& object, const Pose& object_pose,
                                 const Pose& camera, const CameraIntrinsics& intrinsics,
                                 const std::vector<OccluderDisk>& occluders, double time);

/// The symmetry elements an estimator could not rule out from this view: the
/// stabilizer of the visible feature constellation. g belongs iff it maps the
/// set of visible feature positions onto itself within 1e-6 (so an empty
/// visible set admits the whole group). Returned in symmetry_group order;
/// always contains the identity.
std::vector<Eigen::Matrix3d> indistinguishable_set(const ObjectModel& object,
                                                   const ViewDescriptor& descriptor);

/// The four stock objects: cyl-4fold (C4, 1 feature), ring-cont (C8
/// discretization of a continuous symmetry, 1 feature), bracket-2fold
/// (C2, 2 features), peg-asym (trivial group, 3 features).
std::vector<ObjectModel> builtin_objects();
ObjectModel builtin_object(const std::string& name);

/// Object-library file: JSON with name, group (axis + order, or explicit
/// matrices), features, bounding_radius. Validates every invariant on load.
std::vector<ObjectModel> load_object_library(const std::string& path);
void save_object_library(const std::string& path, const std::vector<ObjectModel>& objects);

CameraIntrinsics default_intrinsics();

/// Cosine of the back-face limit: features more than 80 degrees away from
/// the camera direction are treated as unreliable and invisible.
inline constexpr double kBackFaceAngleDeg = 80.0;

}  // namespace activepose
