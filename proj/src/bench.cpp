#include "activepose/bench.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include "activepose/random.hpp"

namespace activepose {

namespace {

using nlohmann::json;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void parallel_for(int n, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  const unsigned workers =
      std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()),
                         static_cast<unsigned>(n));
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

json pose_json(const Pose& p) {
  const auto v = pose_to_seven(p);
  return std::vector<double>(v.begin(), v.end());
}

json config_json(const BenchConfig& cfg) {
  json j;
  j["nbv"] = {{"tau", cfg.nbv.tau},
              {"lambda", cfg.nbv.lambda},
              {"m", cfg.nbv.m},
              {"candidate_radius", cfg.nbv.candidate_radius},
              {"use_normalized_entropy", cfg.nbv.use_normalized_entropy}};
  j["noise"] = {{"translation_sigma", cfg.noise.translation_sigma},
                {"rotation_sigma", cfg.noise.rotation_sigma}};
  j["criteria"] = {{"max_translation_error", cfg.criteria.max_translation_error},
                   {"max_rotation_error", cfg.criteria.max_rotation_error}};
  j["tracker"] = {{"horizon", cfg.tracker.horizon},
                  {"execute_count", cfg.tracker.execute_count},
                  {"history", cfg.tracker.history},
                  {"n_total", cfg.tracker.n_total},
                  {"pose_loss_frames", cfg.tracker.pose_loss_frames},
                  {"hand_eye", pose_json(cfg.tracker.hand_eye)},
                  {"execute_first_k", cfg.tracker.execute_first_k},
                  {"workspace_center",
                   std::vector<double>{cfg.tracker.workspace_center.x(),
                                       cfg.tracker.workspace_center.y(),
                                       cfg.tracker.workspace_center.z()}},
                  {"workspace_radius", cfg.tracker.workspace_radius},
                  {"standoff", cfg.tracker.standoff},
                  {"elevation", cfg.tracker.elevation},
                  {"max_step_rotation", cfg.tracker.max_step_rotation},
                  {"max_step_translation", cfg.tracker.max_step_translation},
                  {"approach_gain", cfg.tracker.approach_gain},
                  {"lock_distance", cfg.tracker.lock_distance},
                  {"intrinsics",
                   {{"fx", cfg.tracker.intrinsics.fx},
                    {"fy", cfg.tracker.intrinsics.fy},
                    {"cx", cfg.tracker.intrinsics.cx},
                    {"cy", cfg.tracker.intrinsics.cy},
                    {"width", cfg.tracker.intrinsics.width},
                    {"height", cfg.tracker.intrinsics.height},
                    {"near_clip", cfg.tracker.intrinsics.near_clip},
                    {"far_clip", cfg.tracker.intrinsics.far_clip}}}};
  j["scan_views"] = cfg.scan_views;
  j["scan_radius"] = cfg.scan_radius;
  j["initial_camera"] = pose_json(cfg.initial_camera);
  j["world_camera"] = pose_json(cfg.world_camera);
  j["placement_disc_radius"] = cfg.placement_disc_radius;
  j["table_z"] = cfg.table_z;
  j["prompt_unambiguous"] = cfg.prompt_unambiguous;
  j["prompt_ambiguous"] = cfg.prompt_ambiguous;
  j["orbit_aware_judge"] = cfg.orbit_aware_judge;
  j["tracking_object"] = cfg.tracking_object;
  return j;
}

std::vector<CellAggregate> aggregate_cells(const std::vector<TrialOutcome>& trials) {
  std::vector<CellAggregate> cells;
  for (const TrialOutcome& t : trials) {
    if (cells.empty() || cells.back().method != t.method || cells.back().object != t.object ||
        cells.back().scenario != t.scenario) {
      CellAggregate c;
      c.method = t.method;
      c.object = t.object;
      c.scenario = t.scenario;
      cells.push_back(std::move(c));
    }
    CellAggregate& c = cells.back();
    ++c.trials;
    c.applicable = c.applicable && t.applicable;
    if (t.applicable) {
      c.successes += t.success ? 1 : 0;
      c.successes_raw += t.success_raw ? 1 : 0;
    }
  }
  for (CellAggregate& c : cells) {
    c.sr = c.trials > 0 ? static_cast<double>(c.successes) / c.trials : 0.0;
    c.sr_raw = c.trials > 0 ? static_cast<double>(c.successes_raw) / c.trials : 0.0;
  }
  return cells;
}

struct ObjectAssets {
  std::vector<EntropyView> scan;
  GeometricPrompt prompt;
  OracleScorer scorer;

  ObjectAssets(const ObjectModel& object, const BenchConfig& cfg)
      : scan(offline_entropy_scan(object, cfg.scan_views, cfg.scan_radius)),
        prompt(build_prompt(scan, cfg.prompt_unambiguous, cfg.prompt_ambiguous, object.name)),
        scorer(object) {}
};

TrialOutcome estimation_trial(const ObjectModel& object, const ObjectAssets& assets,
                              EstimationMethod method, PlacementKind mode, int trial,
                              const BenchConfig& cfg, std::uint64_t master_seed) {
  TrialOutcome out;
  out.method = estimation_method_name(method);
  out.object = object.name;
  out.scenario = placement_kind_name(mode);
  out.trial = trial;
  out.trial_seed = fnv1a_hash("est|" + out.method + "|" + out.object + "|" + out.scenario +
                                  "|" + std::to_string(trial),
                              master_seed);

  PlacementMode placement{mode, fnv1a_hash("placement", out.trial_seed)};
  Pose truth;
  try {
    truth = place_object(object, placement, assets.scan, cfg);
  } catch (const NoAmbiguousView&) {
    out.applicable = false;
    return out;
  }

  EstimatorNoise initial_noise = cfg.noise;
  initial_noise.seed = fnv1a_hash("initial-estimate", out.trial_seed);
  const CameraIntrinsics intr = default_intrinsics();

  PoseHypothesisSet final_estimate;
  switch (method) {
    case EstimationMethod::FixedView: {
      const ViewDescriptor v0 =
          render_descriptor(object, truth, cfg.initial_camera, intr, {}, 0.0);
      final_estimate = estimate(object, v0, initial_noise);
      break;
    }
    case EstimationMethod::RandomNBV: {
      const ViewDescriptor v0 =
          render_descriptor(object, truth, cfg.initial_camera, intr, {}, 0.0);
      final_estimate = estimate(object, v0, initial_noise);
      const double p_amb = assets.scorer.score(v0, assets.prompt).p_amb;
      if (p_amb >= cfg.nbv.tau) {
        out.moved = true;
        const Eigen::Vector3d believed_position =
            cfg.initial_camera.apply(final_estimate.hypotheses.front().pose.translation);
        const auto ring = sample_view_sphere(cfg.nbv.m, cfg.nbv.candidate_radius,
                                             believed_position);
        RandomStream pick_rng(fnv1a_hash("random-nbv", out.trial_seed));
        const auto j = pick_rng.uniform_int(0, cfg.nbv.m - 1);
        EstimatorNoise re_noise = cfg.noise;
        re_noise.seed = fnv1a_hash("re-estimate", out.trial_seed);
        const ViewDescriptor v1 = render_descriptor(object, truth, ring[j], intr, {}, 0.0);
        final_estimate = estimate(object, v1, re_noise);
      }
      break;
    }
    case EstimationMethod::ActiveNBV: {
      const NBVResult r = run_active_estimation(object, truth, cfg.initial_camera,
                                                assets.prompt, assets.scorer, cfg.nbv,
                                                initial_noise);
      final_estimate = r.final_estimate;
      out.moved = r.moved;
      break;
    }
  }

  const JudgeResult judge = judge_details(final_estimate, truth, cfg.criteria, object);
  out.success = cfg.orbit_aware_judge ? judge.success_orbit : judge.success_raw;
  out.success_raw = judge.success_raw;
  out.translation_error = judge.translation_error;
  out.rotation_error_orbit = judge.rotation_error_orbit;
  out.rotation_error_raw = judge.rotation_error_raw;
  return out;
}

TrialOutcome tracking_trial(const ObjectModel& object, TrackingMethod method,
                            ScenarioKind kind, int trial, const BenchConfig& cfg,
                            const Checkpoint& checkpoint, std::uint64_t master_seed) {
  TrialOutcome out;
  out.method = tracking_method_name(method);
  out.object = object.name;
  out.scenario = scenario_kind_name(kind);
  out.trial = trial;
  out.trial_seed = fnv1a_hash("track|" + out.method + "|" + out.scenario + "|" +
                                  std::to_string(trial),
                              master_seed);

  const Scenario scenario = make_scenario(kind, fnv1a_hash("scenario", out.trial_seed));
  EstimatorNoise noise = cfg.noise;
  noise.seed = out.trial_seed;

  TrackRun run;
  switch (method) {
    case TrackingMethod::DiffusionTracker:
      run = run_tracking(checkpoint.params, scenario, cfg.tracker, noise, object);
      break;
    case TrackingMethod::PoseServo: {
      TrackerConfig base = cfg.tracker;
      base.horizon = 1;
      base.execute_count = 1;
      run = run_tracking_with_planner(object, scenario, base, noise,
                                      make_pose_servo_planner(base));
      break;
    }
    case TrackingMethod::WorldCamera: {
      TrackerConfig base = cfg.tracker;
      base.horizon = 1;
      base.execute_count = 1;
      run = run_tracking_with_planner(
          object, scenario, base, noise,
          make_world_camera_planner(cfg.world_camera, base.hand_eye));
      break;
    }
  }

  out.success = run.success;
  out.success_raw = run.success;
  out.pose_loss_count = static_cast<int>(run.pose_loss_events.size());
  out.planner_calls = run.planner_calls;
  return out;
}

}  // namespace

std::string placement_kind_name(PlacementKind kind) {
  switch (kind) {
    case PlacementKind::RandomPlacement: return "RandomPlacement";
    case PlacementKind::HighEntropyPlacement: return "HighEntropyPlacement";
  }
  throw std::invalid_argument("unknown placement kind");
}

PlacementKind placement_kind_from_name(const std::string& name) {
  if (name == "RandomPlacement") return PlacementKind::RandomPlacement;
  if (name == "HighEntropyPlacement") return PlacementKind::HighEntropyPlacement;
  throw std::invalid_argument("unknown placement kind: " + name);
}

std::string estimation_method_name(EstimationMethod m) {
  switch (m) {
    case EstimationMethod::FixedView: return "FixedView";
    case EstimationMethod::RandomNBV: return "RandomNBV";
    case EstimationMethod::ActiveNBV: return "ActiveNBV";
  }
  throw std::invalid_argument("unknown estimation method");
}

std::string tracking_method_name(TrackingMethod m) {
  switch (m) {
    case TrackingMethod::PoseServo: return "PoseServo";
    case TrackingMethod::WorldCamera: return "WorldCamera";
    case TrackingMethod::DiffusionTracker: return "DiffusionTracker";
  }
  throw std::invalid_argument("unknown tracking method");
}

EstimationMethod estimation_method_from_name(const std::string& name) {
  if (name == "FixedView") return EstimationMethod::FixedView;
  if (name == "RandomNBV") return EstimationMethod::RandomNBV;
  if (name == "ActiveNBV") return EstimationMethod::ActiveNBV;
  throw std::invalid_argument("unknown estimation method: " + name);
}

TrackingMethod tracking_method_from_name(const std::string& name) {
  if (name == "PoseServo") return TrackingMethod::PoseServo;
  if (name == "WorldCamera") return TrackingMethod::WorldCamera;
  if (name == "DiffusionTracker") return TrackingMethod::DiffusionTracker;
  throw std::invalid_argument("unknown tracking method: " + name);
}

void SuccessCriteria::validate() const {
  if (!(max_translation_error > 0) || !(max_rotation_error > 0)) {
    throw std::invalid_argument("success thresholds must be > 0");
  }
}

Pose place_object(const ObjectModel& object, const PlacementMode& mode,
                  const std::vector<EntropyView>& offline_scan, const BenchConfig& cfg) {
  RandomStream rng(mode.seed);
  if (mode.kind == PlacementKind::RandomPlacement) {
    const double r = cfg.placement_disc_radius * std::sqrt(rng.uniform01());
    const double theta = rng.uniform(0.0, 2.0 * M_PI);
    Pose p;
    p.translation = {r * std::cos(theta), r * std::sin(theta), cfg.table_z};
    p.rotation = rng.random_rotation();
    return p;
  }

  if (offline_scan.empty()) {
    throw std::invalid_argument("place_object: empty offline scan");
  }
  double max_entropy = 0.0;
  for (const EntropyView& v : offline_scan) max_entropy = std::max(max_entropy, v.entropy);
  if (max_entropy <= 1e-12) {
    throw NoAmbiguousView(object.name + " has no ambiguous viewpoint");
  }
  std::vector<int> best;
  for (int i = 0; i < static_cast<int>(offline_scan.size()); ++i) {
    if (offline_scan[i].entropy >= max_entropy - 1e-9) best.push_back(i);
  }
  const int pick = best[rng.uniform_int(0, static_cast<int>(best.size()) - 1)];
  return compose(cfg.initial_camera, invert(offline_scan[pick].view.camera));
}

JudgeResult judge_details(const PoseHypothesisSet& estimate, const Pose& truth,
                          const SuccessCriteria& crit, const ObjectModel& object) {
  crit.validate();
  if (estimate.hypotheses.empty()) {
    throw std::invalid_argument("judge_details: empty estimate");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < estimate.hypotheses.size(); ++i) {
    if (estimate.hypotheses[i].probability > estimate.hypotheses[best].probability) best = i;
  }
  const Pose picked = compose(estimate.source_view.camera, estimate.hypotheses[best].pose);

  JudgeResult r;
  r.translation_error = (picked.translation - truth.translation).norm();
  r.rotation_error_raw = geodesic_rotation_distance(picked.rotation, truth.rotation);
  r.rotation_error_orbit = r.rotation_error_raw;
  for (const Eigen::Matrix3d& g : object.symmetry_group) {
    r.rotation_error_orbit =
        std::min(r.rotation_error_orbit,
                 geodesic_rotation_distance(picked.rotation, truth.rotation * g));
  }
  r.success_orbit = r.translation_error < crit.max_translation_error &&
                    r.rotation_error_orbit < crit.max_rotation_error;
  r.success_raw = r.translation_error < crit.max_translation_error &&
                  r.rotation_error_raw < crit.max_rotation_error;
  return r;
}

bool judge_estimate(const PoseHypothesisSet& estimate, const Pose& truth,
                    const SuccessCriteria& crit, const ObjectModel& object, bool orbit_aware) {
  const JudgeResult r = judge_details(estimate, truth, crit, object);
  return orbit_aware ? r.success_orbit : r.success_raw;
}

BenchReport run_estimation_benchmark(const std::vector<EstimationMethod>& methods,
                                     const std::vector<ObjectModel>& objects,
                                     const std::vector<PlacementKind>& modes, int trials,
                                     const BenchConfig& cfg, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (methods.empty() || objects.empty() || modes.empty()) {
    throw std::invalid_argument("estimation benchmark needs methods, objects, and modes");
  }

  std::vector<ObjectAssets> assets;
  assets.reserve(objects.size());
  for (const ObjectModel& object : objects) assets.emplace_back(object, cfg);

  struct Job {
    EstimationMethod method;
    std::size_t object_index;
    PlacementKind mode;
    int trial;
  };
  std::vector<Job> jobs;
  for (EstimationMethod method : methods) {
    for (std::size_t oi = 0; oi < objects.size(); ++oi) {
      for (PlacementKind mode : modes) {
        for (int t = 0; t < trials; ++t) jobs.push_back({method, oi, mode, t});
      }
    }
  }

  BenchReport report;
  report.suite = "estimation";
  report.master_seed = seed;
  report.trials.resize(jobs.size());
  parallel_for(static_cast<int>(jobs.size()), [&](int i) {
    const Job& job = jobs[i];
    report.trials[i] = estimation_trial(objects[job.object_index], assets[job.object_index],
                                        job.method, job.mode, job.trial, cfg, seed);
  });
  report.cells = aggregate_cells(report.trials);
  return report;
}

BenchReport run_tracking_benchmark(const std::vector<TrackingMethod>& methods,
                                   const std::vector<ScenarioKind>& scenarios, int trials,
                                   const BenchConfig& cfg, const Checkpoint& checkpoint,
                                   std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (methods.empty() || scenarios.empty()) {
    throw std::invalid_argument("tracking benchmark needs methods and scenarios");
  }
  const ObjectModel object = builtin_object(cfg.tracking_object);

  struct Job {
    TrackingMethod method;
    ScenarioKind kind;
    int trial;
  };
  std::vector<Job> jobs;
  for (TrackingMethod method : methods) {
    for (ScenarioKind kind : scenarios) {
      for (int t = 0; t < trials; ++t) jobs.push_back({method, kind, t});
    }
  }

  BenchReport report;
  report.suite = "tracking";
  report.master_seed = seed;
  report.trials.resize(jobs.size());
  parallel_for(static_cast<int>(jobs.size()), [&](int i) {
    const Job& job = jobs[i];
    report.trials[i] =
        tracking_trial(object, job.method, job.kind, job.trial, cfg, checkpoint, seed);
  });
  report.cells = aggregate_cells(report.trials);
  return report;
}

BenchReport run_combined_benchmark(int trials, const BenchConfig& cfg,
                                   const Checkpoint& checkpoint, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  const ObjectModel object = builtin_object(cfg.tracking_object);
  const ObjectAssets assets(object, cfg);

  BenchReport report;
  report.suite = "combined";
  report.master_seed = seed;
  report.trials.resize(trials);
  parallel_for(trials, [&](int t) {
    TrialOutcome out;
    out.method = "EstimateThenTrack";
    out.object = object.name;
    out.scenario = scenario_kind_name(ScenarioKind::LinearMotion);
    out.trial = t;
    out.trial_seed = fnv1a_hash("combined|" + std::to_string(t), seed);

    const Scenario scenario =
        make_scenario(ScenarioKind::LinearMotion, fnv1a_hash("scenario", out.trial_seed));
    const Pose truth0 = generate_object_trajectory(scenario).front().pose;

    EstimatorNoise noise = cfg.noise;
    noise.seed = fnv1a_hash("initial-estimate", out.trial_seed);
    const NBVResult est = run_active_estimation(object, truth0, cfg.initial_camera,
                                                assets.prompt, assets.scorer, cfg.nbv, noise);
    const JudgeResult judge = judge_details(est.final_estimate, truth0, cfg.criteria, object);
    out.moved = est.moved;
    out.translation_error = judge.translation_error;
    out.rotation_error_orbit = judge.rotation_error_orbit;
    out.rotation_error_raw = judge.rotation_error_raw;

    EstimatorNoise track_noise = cfg.noise;
    track_noise.seed = out.trial_seed;
    const TrackRun run =
        run_tracking(checkpoint.params, scenario, cfg.tracker, track_noise, object);
    const bool estimate_ok = cfg.orbit_aware_judge ? judge.success_orbit : judge.success_raw;
    out.success = estimate_ok && run.success;
    out.success_raw = judge.success_raw && run.success;
    out.pose_loss_count = static_cast<int>(run.pose_loss_events.size());
    out.planner_calls = run.planner_calls;
    report.trials[t] = out;
  });
  report.cells = aggregate_cells(report.trials);
  return report;
}

std::string trials_csv(const BenchReport& report) {
  std::string csv;
  if (report.suite == "estimation") {
    csv = "method,object,mode,trial,seed,applicable,moved,success,success_raw,"
          "translation_error,rotation_error_orbit,rotation_error_raw\n";
    for (const TrialOutcome& t : report.trials) {
      csv += t.method + "," + t.object + "," + t.scenario + "," + std::to_string(t.trial) +
             "," + std::to_string(t.trial_seed) + "," + (t.applicable ? "1" : "0") + ",";
      if (t.applicable) {
        csv += std::string(t.moved ? "1" : "0") + "," + (t.success ? "1" : "0") + "," +
               (t.success_raw ? "1" : "0") + "," + fmt_double(t.translation_error) + "," +
               fmt_double(t.rotation_error_orbit) + "," + fmt_double(t.rotation_error_raw);
      } else {
        csv += ",,,,,";
      }
      csv += "\n";
    }
    return csv;
  }
  csv = "method,object,scenario,trial,seed,success,pose_loss_events,planner_calls\n";
  for (const TrialOutcome& t : report.trials) {
    csv += t.method + "," + t.object + "," + t.scenario + "," + std::to_string(t.trial) + "," +
           std::to_string(t.trial_seed) + "," + (t.success ? "1" : "0") + "," +
           std::to_string(t.pose_loss_count) + "," + std::to_string(t.planner_calls) + "\n";
  }
  return csv;
}

std::string report_json(const BenchReport& report, const BenchConfig& cfg) {
  json j;
  j["suite"] = report.suite;
  j["master_seed"] = report.master_seed;
  j["trial_count"] = report.trials.size();
  j["config"] = config_json(cfg);
  json cells = json::array();
  for (const CellAggregate& c : report.cells) {
    cells.push_back({{"method", c.method},
                     {"object", c.object},
                     {"scenario", c.scenario},
                     {"trials", c.trials},
                     {"successes", c.successes},
                     {"successes_raw", c.successes_raw},
                     {"sr", c.sr},
                     {"sr_raw", c.sr_raw},
                     {"applicable", c.applicable}});
  }
  j["cells"] = cells;
  return j.dump(2) + "\n";
}

void write_report(const std::string& dir, const BenchReport& report, const BenchConfig& cfg) {
  std::filesystem::create_directories(dir);
  const auto csv_path = std::filesystem::path(dir) / (report.suite + "_trials.csv");
  const auto json_path = std::filesystem::path(dir) / (report.suite + "_report.json");
  std::ofstream csv(csv_path);
  if (!csv) throw std::runtime_error("cannot write " + csv_path.string());
  csv << trials_csv(report);
  std::ofstream js(json_path);
  if (!js) throw std::runtime_error("cannot write " + json_path.string());
  js << report_json(report, cfg);
}

}  // namespace activepose
