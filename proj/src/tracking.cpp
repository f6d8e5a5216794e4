#include "activepose/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "activepose/random.hpp"

namespace activepose {

namespace {

// Fixed vantage direction for a demo, chosen from the trajectory so that different
// demos approach from different sides: side-on for translating objects, radially
// outward otherwise.
double vantage_azimuth(const std::vector<TimedPose>& traj) {
  const Eigen::Vector3d disp =
      traj.back().pose.translation - traj.front().pose.translation;
  if (disp.head<2>().norm() > 1e-6) {
    return std::atan2(disp.y(), disp.x()) + M_PI / 2.0;
  }
  const Eigen::Vector3d& start = traj.front().pose.translation;
  if (start.head<2>().norm() > 1e-6) return std::atan2(start.y(), start.x());
  return 0.0;
}

Eigen::Vector3d vantage_direction(double azimuth, double elevation) {
  return {std::cos(azimuth) * std::cos(elevation), std::sin(azimuth) * std::cos(elevation),
          std::sin(elevation)};
}

Eigen::Matrix3d bounded_rotation_step(const Eigen::Matrix3d& from, const Eigen::Matrix3d& to,
                                      double max_rotation) {
  const Eigen::AngleAxisd relative(from.transpose() * to);
  const double angle = std::min(relative.angle(), max_rotation);
  return project_to_rotation(from *
                             Eigen::AngleAxisd(angle, relative.axis()).toRotationMatrix());
}

Eigen::Matrix3d yaw_rotation(double angle) {
  return Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

std::vector<TimedPose> random_spatial_trajectory(const Scenario& s, int n) {
  RandomStream rng(fnv1a_hash("random-spatial", s.seed));
  const double dt = s.duration / (n - 1);

  Eigen::Vector2d position(rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1));
  double yaw = rng.uniform(0.0, 2.0 * M_PI);
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
  double yaw_rate = 0.0;

  std::vector<TimedPose> traj(n);
  for (int i = 0; i < n; ++i) {
    traj[i].t = i * dt;
    traj[i].pose.translation = {position.x(), position.y(), 0.02};
    traj[i].pose.rotation = yaw_rotation(yaw) * s.orientation;
    if (i + 1 == n) break;

    velocity += -s.ou_theta * velocity * dt +
                s.ou_sigma * std::sqrt(dt) *
                    Eigen::Vector2d(rng.gaussian(), rng.gaussian());
    const double speed = velocity.norm();
    if (speed > s.max_speed) velocity *= s.max_speed / speed;
    yaw_rate += -s.ou_theta * yaw_rate * dt + s.ou_sigma * std::sqrt(dt) * rng.gaussian();
    yaw_rate = std::clamp(yaw_rate, -s.max_yaw_rate, s.max_yaw_rate);

    position += velocity * dt;
    if (position.norm() > s.bounds_radius) {
      position *= s.bounds_radius / position.norm();
      velocity.setZero();
    }
    yaw += yaw_rate * dt;
  }
  return traj;
}

}  // namespace

std::string scenario_kind_name(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::LinearMotion: return "LinearMotion";
    case ScenarioKind::CircularRotation: return "CircularRotation";
    case ScenarioKind::TemporaryOcclusion: return "TemporaryOcclusion";
    case ScenarioKind::RandomSpatial: return "RandomSpatial";
  }
  throw std::invalid_argument("unknown scenario kind");
}

ScenarioKind scenario_kind_from_name(const std::string& name) {
  if (name == "LinearMotion") return ScenarioKind::LinearMotion;
  if (name == "CircularRotation") return ScenarioKind::CircularRotation;
  if (name == "TemporaryOcclusion") return ScenarioKind::TemporaryOcclusion;
  if (name == "RandomSpatial") return ScenarioKind::RandomSpatial;
  throw std::invalid_argument("unknown scenario kind: " + name);
}

void Scenario::validate() const {
  if (!(duration > 0)) throw std::invalid_argument("scenario duration must be > 0");
  if (!(rate > 0)) throw std::invalid_argument("scenario rate must be > 0");
  if (kind == ScenarioKind::TemporaryOcclusion) {
    if (occlusion_length < 0 || occlusion_length > 1.0) {
      throw std::invalid_argument("occlusion window must lie in [0, 1] seconds");
    }
    if (occlusion_start < 0) throw std::invalid_argument("occlusion start must be >= 0");
  }
  if (kind == ScenarioKind::CircularRotation && !(orbit_radius > 0)) {
    throw std::invalid_argument("orbit radius must be > 0");
  }
}

void TrackerConfig::validate() const {
  if (execute_count < 1 || execute_count > horizon) {
    throw std::invalid_argument("tracker config requires 1 <= execute_count <= horizon");
  }
  if (history < 1) throw std::invalid_argument("tracker history must be >= 1");
  if (n_total < 1) throw std::invalid_argument("tracker n_total must be >= 1");
  if (pose_loss_frames < 1) throw std::invalid_argument("pose_loss_frames must be >= 1");
  if (!(workspace_radius > 0)) throw std::invalid_argument("workspace radius must be > 0");
  if (!(approach_gain > 0.0 && approach_gain <= 1.0)) {
    throw std::invalid_argument("approach_gain must be in (0, 1]");
  }
  if (!(lock_distance > 0)) throw std::invalid_argument("lock_distance must be > 0");
  if (!hand_eye.is_valid(1e-6)) throw std::invalid_argument("hand_eye is not a valid pose");
}

Scenario make_scenario(ScenarioKind kind, std::uint64_t seed) {
  RandomStream rng(fnv1a_hash(scenario_kind_name(kind), seed));
  Scenario s;
  s.kind = kind;
  s.seed = seed;
  switch (kind) {
    case ScenarioKind::LinearMotion:
    case ScenarioKind::TemporaryOcclusion: {
      const double r_a = rng.uniform(0.15, 0.25);
      const double phi = rng.uniform(0.0, 2.0 * M_PI);
      const double r_b = rng.uniform(0.15, 0.28);
      const double bend = rng.uniform(-0.5, 0.5);
      s.point_a = {r_a * std::cos(phi), r_a * std::sin(phi), 0.02};
      s.point_b = {r_b * std::cos(phi + M_PI + bend), r_b * std::sin(phi + M_PI + bend), 0.02};
      s.orientation = yaw_rotation(rng.uniform(0.0, 2.0 * M_PI));
      if (kind == ScenarioKind::TemporaryOcclusion) {
        // At 10 Hz a 0.38 s blackout covers at most 4 frames, below the default
        // pose_loss_frames of 5, so the scripted occlusion never fails a run by itself.
        s.occlusion_start = rng.uniform(6.0, 12.0);
        s.occlusion_length = rng.uniform(0.2, 0.38);
      }
      break;
    }
    case ScenarioKind::CircularRotation: {
      s.orbit_radius = rng.uniform(0.12, 0.2);
      s.orbit_center = {rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05), 0.02};
      s.phase = rng.uniform(0.0, 2.0 * M_PI);
      s.angular_speed = 2.0 * M_PI / s.duration;
      s.orientation = yaw_rotation(rng.uniform(0.0, 2.0 * M_PI));
      break;
    }
    case ScenarioKind::RandomSpatial:
      break;
  }
  return s;
}

std::vector<TimedPose> generate_object_trajectory(const Scenario& s) {
  s.validate();
  const int n = std::max(2, static_cast<int>(std::llround(s.duration * s.rate)));

  if (s.kind == ScenarioKind::RandomSpatial) return random_spatial_trajectory(s, n);

  std::vector<TimedPose> traj(n);
  const double dt = s.duration / (n - 1);
  for (int i = 0; i < n; ++i) {
    const double t = i * dt;
    traj[i].t = t;
    switch (s.kind) {
      case ScenarioKind::LinearMotion:
      case ScenarioKind::TemporaryOcclusion: {
        traj[i].pose.translation = s.point_a + (s.point_b - s.point_a) * (t / s.duration);
        traj[i].pose.rotation = s.orientation;
        break;
      }
      case ScenarioKind::CircularRotation: {
        const double theta = s.phase + s.angular_speed * t;
        traj[i].pose.translation =
            s.orbit_center + yaw_rotation(theta) * Eigen::Vector3d(s.orbit_radius, 0.0, 0.0);
        traj[i].pose.rotation = yaw_rotation(theta) * s.orientation;
        break;
      }
      case ScenarioKind::RandomSpatial:
        break;
    }
  }
  return traj;
}

Pose expert_vantage_camera(const std::vector<TimedPose>& object_traj, const TrackerConfig& cfg,
                           int frame) {
  if (object_traj.empty()) throw std::invalid_argument("empty object trajectory");
  if (frame < 0 || frame >= static_cast<int>(object_traj.size())) {
    throw std::invalid_argument("frame outside trajectory");
  }
  const Eigen::Vector3d u = vantage_direction(vantage_azimuth(object_traj), cfg.elevation);
  const Eigen::Vector3d& target = object_traj[frame].pose.translation;
  return camera_look_at(target + cfg.standoff * u, target);
}

std::vector<Pose> expert_camera_policy(const std::vector<TimedPose>& object_traj,
                                       const TrackerConfig& cfg, std::uint64_t perturb_seed) {
  if (object_traj.empty()) throw std::invalid_argument("empty object trajectory");
  cfg.validate();

  RandomStream rng(perturb_seed);
  const auto draw_impulse = [&rng](double lo, double hi) {
    const double norm = rng.uniform(lo, hi);
    return Eigen::Vector3d(norm * rng.unit_vector());
  };

  Eigen::Vector3d initial_offset = Eigen::Vector3d::Zero();
  std::size_t next_bump = object_traj.size();
  if (perturb_seed != 0) {
    initial_offset = draw_impulse(0.02, 0.06);
    next_bump = static_cast<std::size_t>(rng.uniform_int(12, 25));
  }

  std::vector<Pose> ee;
  ee.reserve(object_traj.size());
  Pose cam;
  for (std::size_t i = 0; i < object_traj.size(); ++i) {
    const Pose target = expert_vantage_camera(object_traj, cfg, static_cast<int>(i));
    if (i == 0) {
      // A displaced start still aims at the object, so frame 0 keeps it in view.
      cam = camera_look_at(target.translation + initial_offset,
                           object_traj[0].pose.translation);
    } else {
      // Track the moving vantage while contracting any displacement from it, so
      // demonstrations record how to correct a displaced camera before settling.
      const Pose prev_target =
          expert_vantage_camera(object_traj, cfg, static_cast<int>(i) - 1);
      Eigen::Vector3d displacement = cam.translation - prev_target.translation;
      displacement = displacement.norm() <= cfg.lock_distance
                         ? Eigen::Vector3d::Zero()
                         : Eigen::Vector3d((1.0 - cfg.approach_gain) * displacement);
      if (i == next_bump) {
        // Periodic re-displacement keeps corrective segments coming with fresh
        // directions instead of a single decaying approach at the start. The
        // kicks also decorrelate camera motion from object motion, which keeps
        // a policy trained on these demos from chasing its own momentum.
        displacement += draw_impulse(0.02, 0.05);
        next_bump += static_cast<std::size_t>(rng.uniform_int(12, 25));
      }
      Eigen::Vector3d delta = target.translation + displacement - cam.translation;
      const double dist = delta.norm();
      if (dist > cfg.max_step_translation) delta *= cfg.max_step_translation / dist;
      cam.translation += delta;
      cam.rotation = bounded_rotation_step(cam.rotation, target.rotation, cfg.max_step_rotation);
    }
    if (!in_frustum(cam, cfg.intrinsics, object_traj[i].pose.translation)) {
      throw InfeasibleStandoff("object left the frustum at frame " + std::to_string(i));
    }
    ee.push_back(compose(cam, invert(cfg.hand_eye)));
  }
  return ee;
}

std::vector<OccluderDisk> scenario_occluders(const Scenario& s, const TrackerConfig& cfg) {
  if (s.kind != ScenarioKind::TemporaryOcclusion) return {};
  s.validate();

  const auto traj = generate_object_trajectory(s);
  int i0 = 0;
  double best = std::abs(traj[0].t - s.occlusion_start);
  for (int i = 1; i < static_cast<int>(traj.size()); ++i) {
    const double d = std::abs(traj[i].t - s.occlusion_start);
    if (d < best) {
      best = d;
      i0 = i;
    }
  }

  Scenario base = s;
  base.kind = ScenarioKind::LinearMotion;
  const auto expert = expert_camera_policy(generate_object_trajectory(base), cfg);
  const Pose cam = compose(expert[i0], cfg.hand_eye);

  OccluderDisk disk;
  disk.center = 0.5 * (cam.translation + traj[i0].pose.translation);
  disk.radius = 0.05;
  disk.t0 = s.occlusion_start;
  disk.t1 = s.occlusion_start + s.occlusion_length;
  return {disk};
}

std::vector<TimestepRecord> build_dataset(const std::vector<Scenario>& scenarios,
                                          int demos_per_scenario, const TrackerConfig& cfg) {
  if (demos_per_scenario < 1) {
    throw std::invalid_argument("demos_per_scenario must be >= 1");
  }
  cfg.validate();

  std::vector<TimestepRecord> records;
  for (const Scenario& base : scenarios) {
    base.validate();
    for (int d = 0; d < demos_per_scenario; ++d) {
      const Scenario demo =
          make_scenario(base.kind, fnv1a_hash("demo-" + std::to_string(d), base.seed));
      const auto traj = generate_object_trajectory(demo);
      // Perturbed demonstrations teach the policy how to pull back on station
      // from many displacements, not just how to ride the vantage.
      const auto ee = expert_camera_policy(traj, cfg, fnv1a_hash("approach", demo.seed));
      for (std::size_t i = 0; i < traj.size(); ++i) {
        TimestepRecord r;
        r.t = traj[i].t;
        r.object_pose = traj[i].pose;
        r.ee_pose = ee[i];
        r.scenario = scenario_kind_name(base.kind);
        r.demo_id = d;
        records.push_back(std::move(r));
      }
    }
  }
  return records;
}

TrackRun run_tracking_with_planner(const ObjectModel& object, const Scenario& s,
                                   const TrackerConfig& cfg, const EstimatorNoise& noise,
                                   const Planner& planner) {
  cfg.validate();
  const auto traj = generate_object_trajectory(s);
  if (cfg.n_total > static_cast<int>(traj.size())) {
    throw std::invalid_argument("n_total exceeds the scenario trajectory length");
  }
  const auto occluders = scenario_occluders(s, cfg);

  const Pose initial_cam = expert_vantage_camera(traj, cfg, 0);
  Pose ee = compose(initial_cam, invert(cfg.hand_eye));

  TrackRun run;
  run.executed.reserve(cfg.n_total);

  // The run starts from a handed-off detection: the initial object pose is known.
  Pose last_object_in_base = traj[0].pose;
  std::vector<Pose> object_history;
  std::vector<Pose> ee_history;
  std::deque<Pose> pending;
  int consecutive_empty = 0;
  bool event_armed = true;

  for (int frame = 0; frame < cfg.n_total; ++frame) {
    if (frame > 0) {
      if (pending.empty()) throw std::logic_error("command queue underrun");
      const Pose command = pending.front();
      pending.pop_front();
      if ((command.translation - cfg.workspace_center).norm() <= cfg.workspace_radius) {
        ee = command;
      }
    }

    const Pose cam = compose(ee, cfg.hand_eye);
    const ViewDescriptor desc =
        render_descriptor(object, traj[frame].pose, cam, cfg.intrinsics, occluders,
                          traj[frame].t);
    const bool visible = desc.object_in_view;
    if (visible) {
      EstimatorNoise frame_noise = noise;
      frame_noise.seed = fnv1a_hash("track-est-frame-" + std::to_string(frame), noise.seed);
      const PoseHypothesisSet est = estimate(object, desc, frame_noise);
      const Pose& object_in_cam = est.hypotheses.front().pose;
      last_object_in_base = object_in_base(invert(object_in_cam), invert(ee), cfg.hand_eye);
      consecutive_empty = 0;
      event_armed = true;
    } else {
      ++consecutive_empty;
      if (event_armed && consecutive_empty >= cfg.pose_loss_frames) {
        run.pose_loss_events.push_back(frame - cfg.pose_loss_frames + 1);
        event_armed = false;
      }
    }

    run.executed.push_back(ee);
    run.believed.push_back(last_object_in_base);
    run.visible.push_back(visible);
    object_history.push_back(last_object_in_base);
    ee_history.push_back(ee);

    if (frame % cfg.execute_count == 0) {
      Observation obs;
      for (int i = cfg.history - 1; i >= 0; --i) {
        const int idx = std::max(0, static_cast<int>(object_history.size()) - 1 - i);
        obs.object_poses.push_back(object_history[idx]);
        obs.ee_poses.push_back(ee_history[idx]);
      }
      std::vector<Pose> predicted = planner(obs);
      if (static_cast<int>(predicted.size()) != cfg.horizon) {
        throw std::runtime_error("planner returned a chunk of the wrong horizon");
      }
      PlanRound round;
      round.frame_start = frame;
      const int first = cfg.execute_first_k ? 0 : cfg.horizon - cfg.execute_count;
      for (int i = 0; i < cfg.execute_count; ++i) {
        round.executed_indices.push_back(first + i);
        pending.push_back(predicted[first + i]);
      }
      round.predicted = std::move(predicted);
      run.rounds.push_back(std::move(round));
      ++run.planner_calls;
    }
  }

  run.success = run.pose_loss_events.empty();
  return run;
}

TrackRun run_tracking(const DenoiserParams& params, const Scenario& s, const TrackerConfig& cfg,
                      const EstimatorNoise& noise, const ObjectModel& object) {
  if (params.history != cfg.history || params.horizon != cfg.horizon) {
    throw std::invalid_argument("denoiser window sizes do not match the tracker config");
  }
  const NoiseSchedule schedule = make_schedule(params.n_steps);
  RandomStream rng(fnv1a_hash("track-sample", noise.seed));
  const Planner planner = [&](const Observation& obs) {
    return sample(params, obs, schedule, rng);
  };
  return run_tracking_with_planner(object, s, cfg, noise, planner);
}

Planner make_pose_servo_planner(const TrackerConfig& cfg, double gain) {
  if (!(gain > 0) || gain > 1) throw std::invalid_argument("servo gain must lie in (0, 1]");
  return [cfg, gain](const Observation& obs) {
    const Pose& object_pose = obs.object_poses.back();
    const Pose cam = compose(obs.ee_poses.back(), cfg.hand_eye);

    const Eigen::Vector3d offset = cam.translation - object_pose.translation;
    const double azimuth =
        offset.head<2>().norm() > 1e-9 ? std::atan2(offset.y(), offset.x()) : 0.0;
    const Eigen::Vector3d u = vantage_direction(azimuth, cfg.elevation);
    const Pose target = camera_look_at(object_pose.translation + cfg.standoff * u,
                                       object_pose.translation);

    Pose next;
    next.translation = cam.translation + gain * (target.translation - cam.translation);
    const Eigen::AngleAxisd relative(cam.rotation.transpose() * target.rotation);
    next.rotation =
        cam.rotation *
        Eigen::AngleAxisd(gain * relative.angle(), relative.axis()).toRotationMatrix();
    next.rotation = project_to_rotation(next.rotation);
    return std::vector<Pose>{compose(next, invert(cfg.hand_eye))};
  };
}

Planner make_world_camera_planner(const Pose& world_camera, const Pose& hand_eye) {
  const Pose ee = compose(world_camera, invert(hand_eye));
  return [ee](const Observation&) { return std::vector<Pose>{ee}; };
}

}  // namespace activepose
