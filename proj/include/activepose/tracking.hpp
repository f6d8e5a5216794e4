#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "activepose/diffusion.hpp"
#include "activepose/estimator.hpp"
#include "activepose/geometry.hpp"
#include "activepose/scene.hpp"

namespace activepose {

class InfeasibleStandoff : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ScenarioKind { LinearMotion, CircularRotation, TemporaryOcclusion, RandomSpatial };

std::string scenario_kind_name(ScenarioKind kind);
ScenarioKind scenario_kind_from_name(const std::string& name);

// Object motion script. Kind-specific fields are ignored by the other kinds.
struct Scenario {
  ScenarioKind kind = ScenarioKind::LinearMotion;
  double duration = 20.0;
  double rate = 10.0;
  std::uint64_t seed = 0;

  // LinearMotion and TemporaryOcclusion: straight segment with fixed orientation.
  Eigen::Vector3d point_a{0.2, 0.0, 0.02};
  Eigen::Vector3d point_b{-0.2, 0.0, 0.02};
  Eigen::Matrix3d orientation = Eigen::Matrix3d::Identity();

  // CircularRotation: turntable about a fixed point.
  Eigen::Vector3d orbit_center{0.0, 0.0, 0.02};
  double orbit_radius = 0.15;
  double angular_speed = 2.0 * M_PI / 20.0;
  double phase = 0.0;

  // TemporaryOcclusion: sightline blocked for a sub-second window.
  double occlusion_start = 8.0;
  double occlusion_length = 0.4;

  // RandomSpatial: Ornstein-Uhlenbeck velocity walk on a bounded disc.
  double ou_theta = 1.0;
  double ou_sigma = 0.05;
  double max_speed = 0.06;
  double max_yaw_rate = 0.4;
  double bounds_radius = 0.25;

  void validate() const;
};

Scenario make_scenario(ScenarioKind kind, std::uint64_t seed);

struct TimedPose {
  double t = 0.0;
  Pose pose;
};

struct TrackerConfig {
  int horizon = 20;
  int execute_count = 5;
  int history = 2;
  int n_total = 200;
  int pose_loss_frames = 5;
  Pose hand_eye{Eigen::Matrix3d::Identity(), Eigen::Vector3d(0.03, 0.0, 0.06)};
  CameraIntrinsics intrinsics;
  bool execute_first_k = false;
  Eigen::Vector3d workspace_center{0.0, 0.0, 0.0};
  double workspace_radius = 0.9;
  double standoff = 0.4;
  double elevation = M_PI / 4.0;
  double max_step_rotation = deg_to_rad(10.0);
  double max_step_translation = 0.05;
  double approach_gain = 0.15;
  double lock_distance = 0.015;

  void validate() const;
};

struct PlanRound {
  int frame_start = 0;
  std::vector<Pose> predicted;
  std::vector<int> executed_indices;
};

struct TrackRun {
  std::vector<Pose> executed;
  std::vector<Pose> believed;
  std::vector<bool> visible;
  std::vector<int> pose_loss_events;
  bool success = true;
  int planner_calls = 0;
  std::vector<PlanRound> rounds;
};

std::vector<TimedPose> generate_object_trajectory(const Scenario& s);

// Occluder placement is derived from the expert sightline, so it needs the camera config.
std::vector<OccluderDisk> scenario_occluders(const Scenario& s, const TrackerConfig& cfg);

// With perturb_seed == 0 the camera rides the standoff vantage exactly. A nonzero seed
// displaces the camera at the start and at seeded intervals; the policy then converges
// back with proportional, bounded steps. Demonstrations use this so the recorded chunks
// carry corrective motion from many offsets, not just steady-state tracking.
std::vector<Pose> expert_camera_policy(const std::vector<TimedPose>& object_traj,
                                       const TrackerConfig& cfg,
                                       std::uint64_t perturb_seed = 0);

// Expert camera pose for one frame of the trajectory; frame 0 is the tracking start pose.
Pose expert_vantage_camera(const std::vector<TimedPose>& object_traj, const TrackerConfig& cfg,
                           int frame);

std::vector<TimestepRecord> build_dataset(const std::vector<Scenario>& scenarios,
                                          int demos_per_scenario, const TrackerConfig& cfg);

// Maps the latest observation window to cfg.horizon future EE poses in the base frame.
using Planner = std::function<std::vector<Pose>(const Observation&)>;

TrackRun run_tracking_with_planner(const ObjectModel& object, const Scenario& s,
                                   const TrackerConfig& cfg, const EstimatorNoise& noise,
                                   const Planner& planner);

TrackRun run_tracking(const DenoiserParams& params, const Scenario& s, const TrackerConfig& cfg,
                      const EstimatorNoise& noise, const ObjectModel& object);

// Baseline planners run with horizon = execute_count = 1.
Planner make_pose_servo_planner(const TrackerConfig& cfg, double gain = 0.5);
Planner make_world_camera_planner(const Pose& world_camera, const Pose& hand_eye);

}  // namespace activepose
