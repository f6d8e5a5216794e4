#include "activepose/scene.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace activepose {

namespace {

using nlohmann::json;

bool matrices_close(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b, double tol) {
  return (a - b).cwiseAbs().maxCoeff() <= tol;
}

bool group_contains(const std::vector<Eigen::Matrix3d>& group, const Eigen::Matrix3d& m,
                    double tol) {
  return std::any_of(group.begin(), group.end(),
                     [&](const Eigen::Matrix3d& g) { return matrices_close(g, m, tol); });
}

/// Cyclic group about `axis`: powers g^1 .. g^order, so the identity sits last.
std::vector<Eigen::Matrix3d> cyclic_group(const Eigen::Vector3d& axis, int order) {
  std::vector<Eigen::Matrix3d> group;
  group.reserve(order);
  for (int k = 1; k < order; ++k) {
    group.push_back(rotation_about_axis(axis, 2.0 * M_PI * k / order));
  }
  group.push_back(Eigen::Matrix3d::Identity());
  return group;
}

}  // namespace

void ObjectModel::validate() const {
  const double tol = 1e-6;
  if (name.empty()) throw std::invalid_argument("object: empty name");
  if (symmetry_group.empty()) throw std::invalid_argument(name + ": empty symmetry group");
  if (!(bounding_radius > 0)) throw std::invalid_argument(name + ": bounding_radius must be > 0");

  if (!group_contains(symmetry_group, Eigen::Matrix3d::Identity(), tol)) {
    throw std::invalid_argument(name + ": symmetry group does not contain the identity");
  }
  for (const auto& g : symmetry_group) {
    if (std::abs(g.determinant() - 1.0) > tol ||
        !matrices_close(g.transpose() * g, Eigen::Matrix3d::Identity(), tol)) {
      throw std::invalid_argument(name + ": symmetry group element is not a rotation");
    }
    if (!group_contains(symmetry_group, g.transpose(), tol)) {
      throw std::invalid_argument(name + ": symmetry group not closed under inverse");
    }
    for (const auto& h : symmetry_group) {
      if (!group_contains(symmetry_group, g * h, tol)) {
        throw std::invalid_argument(name + ": symmetry group not closed under composition");
      }
    }
  }
  for (const auto& f : features) {
    if (std::abs(f.normal.norm() - 1.0) > 1e-9) {
      throw std::invalid_argument(name + ": feature normal is not unit length");
    }
    if (f.position.norm() > bounding_radius) {
      throw std::invalid_argument(name + ": feature outside bounding radius");
    }
  }
}

bool OccluderDisk::blocks(const Eigen::Vector3d& from, const Eigen::Vector3d& to,
                          double time) const {
  if (!active_at(time)) return false;
  const Eigen::Vector3d seg = to - from;
  const double len2 = seg.squaredNorm();
  double s = 0.0;
  if (len2 > 0.0) s = std::clamp((center - from).dot(seg) / len2, 0.0, 1.0);
  const double miss = (from + s * seg - center).norm();
  return miss < radius;
}

std::vector<Pose> sample_view_sphere(int n, double radius, const Eigen::Vector3d& center) {
  if (n < 1) throw std::invalid_argument("sample_view_sphere: n must be >= 1");
  if (!(radius > 0)) throw std::invalid_argument("sample_view_sphere: radius must be > 0");
  const double golden_angle = M_PI * (3.0 - std::sqrt(5.0));
  std::vector<Pose> poses;
  poses.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden_angle * i;
    const Eigen::Vector3d dir(r * std::cos(phi), r * std::sin(phi), z);
    poses.push_back(camera_look_at(center + radius * dir, center));
  }
  return poses;
}

ViewDescriptor render_descriptor(const ObjectModel& object, const Pose& object_pose,
                                 const Pose& camera, const CameraIntrinsics& intrinsics,
                                 const std::vector<OccluderDisk>& occluders, double time) {
  const double cos_limit = std::cos(deg_to_rad(kBackFaceAngleDeg));
  const Eigen::Vector3d cam_pos = camera.translation;

  ViewDescriptor d;
  d.camera = camera;
  d.object_in_camera = compose(invert(camera), object_pose);
  d.occluder_active = std::any_of(occluders.begin(), occluders.end(),
                                  [&](const OccluderDisk& o) { return o.active_at(time); });

  const auto occluded = [&](const Eigen::Vector3d& target) {
    return std::any_of(occluders.begin(), occluders.end(),
                       [&](const OccluderDisk& o) { return o.blocks(cam_pos, target, time); });
  };

  for (const auto& f : object.features) {
    const Eigen::Vector3d pos_w = object_pose.apply(f.position);
    const Eigen::Vector3d normal_w = object_pose.rotation * f.normal;
    const Eigen::Vector3d to_cam = (cam_pos - pos_w).normalized();
    if (normal_w.dot(to_cam) <= cos_limit) continue;
    if (!in_frustum(camera, intrinsics, pos_w)) continue;
    if (occluded(pos_w)) continue;
    d.visible_feature_ids.push_back(f.id);
  }
  std::sort(d.visible_feature_ids.begin(), d.visible_feature_ids.end());

  const Eigen::Vector3d center_w = object_pose.translation;
  const bool center_seen = in_frustum(camera, intrinsics, center_w) && !occluded(center_w);
  d.object_in_view = center_seen || !d.visible_feature_ids.empty();
  return d;
}

std::vector<Eigen::Matrix3d> indistinguishable_set(const ObjectModel& object,
                                                   const ViewDescriptor& descriptor) {
  const double tol = 1e-6;

  std::vector<Eigen::Vector3d> visible;
  visible.reserve(descriptor.visible_feature_ids.size());
  for (const int id : descriptor.visible_feature_ids) {
    for (const auto& f : object.features) {
      if (f.id == id) visible.push_back(f.position);
    }
  }

  // Stabilizer of the visible constellation: rigid transforms preserve
  // distances, so object-frame comparison is equivalent to camera-frame.
  std::vector<Eigen::Matrix3d> out;
  for (const auto& g : object.symmetry_group) {
    std::vector<bool> used(visible.size(), false);
    bool all_matched = true;
    for (const auto& p : visible) {
      const Eigen::Vector3d q = g * p;
      bool matched = false;
      for (std::size_t j = 0; j < visible.size(); ++j) {
        if (!used[j] && (visible[j] - q).norm() <= tol) {
          used[j] = true;
          matched = true;
          break;
        }
      }
      if (!matched) {
        all_matched = false;
        break;
      }
    }
    if (all_matched) out.push_back(g);
  }
  return out;
}

std::vector<ObjectModel> builtin_objects() {
  std::vector<ObjectModel> objects;

  {
    ObjectModel o;
    o.name = "cyl-4fold";
    o.symmetry_group = cyclic_group(Eigen::Vector3d::UnitZ(), 4);
    o.bounding_radius = 0.06;
    o.features.push_back({{0.05, 0.0, 0.01}, Eigen::Vector3d::UnitX(), 0});
    objects.push_back(std::move(o));
  }
  {
    ObjectModel o;
    o.name = "ring-cont";  // continuous symmetry discretized to C8
    o.symmetry_group = cyclic_group(Eigen::Vector3d::UnitZ(), 8);
    o.bounding_radius = 0.06;
    o.features.push_back({{0.055, 0.0, 0.005}, Eigen::Vector3d::UnitX(), 0});
    objects.push_back(std::move(o));
  }
  {
    ObjectModel o;
    o.name = "bracket-2fold";
    o.symmetry_group = cyclic_group(Eigen::Vector3d::UnitZ(), 2);
    o.bounding_radius = 0.07;
    o.features.push_back({{0.05, 0.015, 0.02}, Eigen::Vector3d::UnitX(), 0});
    o.features.push_back({{-0.04, 0.02, -0.015}, -Eigen::Vector3d::UnitX(), 1});
    objects.push_back(std::move(o));
  }
  {
    ObjectModel o;
    o.name = "peg-asym";
    o.symmetry_group = {Eigen::Matrix3d::Identity()};
    o.bounding_radius = 0.05;
    o.features.push_back({{0.04, 0.0, 0.0}, Eigen::Vector3d::UnitX(), 0});
    o.features.push_back({{0.0, 0.04, 0.0}, Eigen::Vector3d::UnitY(), 1});
    o.features.push_back({{0.0, 0.0, 0.045}, Eigen::Vector3d::UnitZ(), 2});
    objects.push_back(std::move(o));
  }

  for (const auto& o : objects) o.validate();
  return objects;
}

ObjectModel builtin_object(const std::string& name) {
  for (auto& o : builtin_objects()) {
    if (o.name == name) return o;
  }
  throw std::invalid_argument("unknown builtin object: " + name);
}

namespace {

Eigen::Vector3d vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

ObjectModel object_from_json(const json& j) {
  ObjectModel o;
  o.name = j.at("name").get<std::string>();
  o.bounding_radius = j.at("bounding_radius").get<double>();

  const json& group = j.at("group");
  if (group.contains("order")) {
    const int order = group.at("order").get<int>();
    if (order < 1) throw std::invalid_argument(o.name + ": group order must be >= 1");
    o.symmetry_group = cyclic_group(vec3_from_json(group.at("axis")), order);
  } else {
    for (const json& m : group.at("matrices")) {
      if (!m.is_array() || m.size() != 9) throw std::invalid_argument("group matrix needs 9 values");
      Eigen::Matrix3d r;
      for (int i = 0; i < 9; ++i) r(i / 3, i % 3) = m[i].get<double>();  // row-major
      o.symmetry_group.push_back(r);
    }
  }
  for (const json& f : j.at("features")) {
    DistinguishingFeature feat;
    feat.id = f.at("id").get<int>();
    feat.position = vec3_from_json(f.at("position"));
    feat.normal = vec3_from_json(f.at("normal")).normalized();
    o.features.push_back(feat);
  }
  o.validate();
  return o;
}

}  // namespace

std::vector<ObjectModel> load_object_library(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open object library: " + path);
  json j = json::parse(in);
  std::vector<ObjectModel> objects;
  for (const json& obj : j.at("objects")) objects.push_back(object_from_json(obj));
  return objects;
}

void save_object_library(const std::string& path, const std::vector<ObjectModel>& objects) {
  json out;
  out["version"] = 1;
  out["objects"] = json::array();
  for (const auto& o : objects) {
    json jo;
    jo["name"] = o.name;
    jo["bounding_radius"] = o.bounding_radius;
    json mats = json::array();
    for (const auto& g : o.symmetry_group) {
      json m = json::array();
      for (int i = 0; i < 9; ++i) m.push_back(g(i / 3, i % 3));
      mats.push_back(m);
    }
    jo["group"] = {{"matrices", mats}};
    jo["features"] = json::array();
    for (const auto& f : o.features) {
      jo["features"].push_back({{"id", f.id},
                                {"position", {f.position.x(), f.position.y(), f.position.z()}},
                                {"normal", {f.normal.x(), f.normal.y(), f.normal.z()}}});
    }
    out["objects"].push_back(jo);
  }
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write object library: " + path);
  os << out.dump(2) << "\n";
}

CameraIntrinsics default_intrinsics() { return CameraIntrinsics{}; }

}  // namespace activepose
