#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "activepose/ambiguity.hpp"
#include "activepose/diffusion.hpp"
#include "activepose/estimator.hpp"
#include "activepose/geometry.hpp"
#include "activepose/nbv.hpp"
#include "activepose/scene.hpp"
#include "activepose/tracking.hpp"

namespace activepose {

class NoAmbiguousView : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PlacementKind { RandomPlacement, HighEntropyPlacement };

std::string placement_kind_name(PlacementKind kind);
PlacementKind placement_kind_from_name(const std::string& name);

struct PlacementMode {
  PlacementKind kind = PlacementKind::RandomPlacement;
  std::uint64_t seed = 0;
};

struct SuccessCriteria {
  double max_translation_error = 0.005;
  double max_rotation_error = deg_to_rad(5.0);

  void validate() const;
};

enum class EstimationMethod { FixedView, RandomNBV, ActiveNBV };
enum class TrackingMethod { PoseServo, WorldCamera, DiffusionTracker };

std::string estimation_method_name(EstimationMethod m);
std::string tracking_method_name(TrackingMethod m);
EstimationMethod estimation_method_from_name(const std::string& name);
TrackingMethod tracking_method_from_name(const std::string& name);

struct BenchConfig {
  NBVConfig nbv;
  EstimatorNoise noise{0.002, deg_to_rad(1.0), 0};
  SuccessCriteria criteria;
  TrackerConfig tracker;
  int scan_views = 64;
  double scan_radius = 0.4;
  Pose initial_camera = camera_look_at({0.4, 0.0, 0.3}, {0.0, 0.0, 0.02});
  Pose world_camera = camera_look_at({0.0, 0.0, 0.30}, {0.0, 0.0, 0.02});
  double placement_disc_radius = 0.15;
  double table_z = 0.02;
  int prompt_unambiguous = 3;
  int prompt_ambiguous = 1;
  bool orbit_aware_judge = true;
  std::string tracking_object = "peg-asym";
};

struct TrialOutcome {
  std::string method;
  std::string object;
  std::string scenario;
  int trial = 0;
  std::uint64_t trial_seed = 0;
  bool applicable = true;
  bool success = false;
  // Estimation-only fields.
  bool success_raw = false;
  bool moved = false;
  double translation_error = 0.0;
  double rotation_error_orbit = 0.0;
  double rotation_error_raw = 0.0;
  // Tracking-only fields.
  int pose_loss_count = 0;
  int planner_calls = 0;
};

struct CellAggregate {
  std::string method;
  std::string object;
  std::string scenario;
  int trials = 0;
  int successes = 0;
  int successes_raw = 0;
  double sr = 0.0;
  double sr_raw = 0.0;
  bool applicable = true;
};

struct BenchReport {
  std::string suite;
  std::uint64_t master_seed = 0;
  std::vector<TrialOutcome> trials;
  std::vector<CellAggregate> cells;
};

struct JudgeResult {
  bool success_orbit = false;
  bool success_raw = false;
  double translation_error = 0.0;
  double rotation_error_orbit = 0.0;
  double rotation_error_raw = 0.0;
};

Pose place_object(const ObjectModel& object, const PlacementMode& mode,
                  const std::vector<EntropyView>& offline_scan, const BenchConfig& cfg);

JudgeResult judge_details(const PoseHypothesisSet& estimate, const Pose& truth,
                          const SuccessCriteria& crit, const ObjectModel& object);

bool judge_estimate(const PoseHypothesisSet& estimate, const Pose& truth,
                    const SuccessCriteria& crit, const ObjectModel& object,
                    bool orbit_aware = true);

BenchReport run_estimation_benchmark(const std::vector<EstimationMethod>& methods,
                                     const std::vector<ObjectModel>& objects,
                                     const std::vector<PlacementKind>& modes, int trials,
                                     const BenchConfig& cfg, std::uint64_t seed);

BenchReport run_tracking_benchmark(const std::vector<TrackingMethod>& methods,
                                   const std::vector<ScenarioKind>& scenarios, int trials,
                                   const BenchConfig& cfg, const Checkpoint& checkpoint,
                                   std::uint64_t seed);

// Estimate-then-track episodes: success requires passing the pose judge and then
// completing the tracking run without pose loss. A separate suite with its own metric.
BenchReport run_combined_benchmark(int trials, const BenchConfig& cfg,
                                   const Checkpoint& checkpoint, std::uint64_t seed);

std::string trials_csv(const BenchReport& report);
std::string report_json(const BenchReport& report, const BenchConfig& cfg);

// Writes <dir>/<suite>_trials.csv and <dir>/<suite>_report.json.
void write_report(const std::string& dir, const BenchReport& report, const BenchConfig& cfg);

}  // namespace activepose
