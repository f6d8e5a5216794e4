#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "activepose/bench.hpp"
#include "activepose/random.hpp"
#include "test_util.hpp"

using namespace activepose;
using namespace activepose::testutil;

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

PoseHypothesisSet single_estimate(const Pose& object_in_camera, const Pose& camera) {
  PoseHypothesisSet set;
  set.source_view.camera = camera;
  set.hypotheses.push_back({object_in_camera, 1.0});
  return set;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TEST_CASE("random placement draws seeded poses on the table disc") {
  const auto peg = builtin_object("peg-asym");
  const BenchConfig cfg;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Pose p = place_object(peg, {PlacementKind::RandomPlacement, seed}, {}, cfg);
    CHECK(p.translation.head<2>().norm() <= cfg.placement_disc_radius + 1e-12);
    CHECK(p.translation.z() == cfg.table_z);
    CHECK((p.rotation * p.rotation.transpose() - Eigen::Matrix3d::Identity())
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }
  const Pose a = place_object(peg, {PlacementKind::RandomPlacement, 7}, {}, cfg);
  const Pose b = place_object(peg, {PlacementKind::RandomPlacement, 7}, {}, cfg);
  const Pose c = place_object(peg, {PlacementKind::RandomPlacement, 8}, {}, cfg);
  CHECK(pose_diff(a, b) == 0.0);
  CHECK(pose_diff(a, c) > 0.0);
}

TEST_CASE("high-entropy placement reproduces a maximally ambiguous initial view") {
  const auto cyl = builtin_object("cyl-4fold");
  const BenchConfig cfg;
  const auto scan = offline_entropy_scan(cyl, cfg.scan_views, cfg.scan_radius);

  double max_entropy = 0.0;
  for (const auto& v : scan) max_entropy = std::max(max_entropy, v.entropy);
  CHECK(max_entropy == doctest::Approx(std::log(4.0)).epsilon(1e-12));

  const Pose truth = place_object(cyl, {PlacementKind::HighEntropyPlacement, 3}, scan, cfg);
  const auto view =
      render_descriptor(cyl, truth, cfg.initial_camera, default_intrinsics(), {}, 0.0);
  REQUIRE(view.object_in_view);
  const auto est = estimate(cyl, view, {});
  CHECK(est.hypotheses.size() == 4);

  const Pose again = place_object(cyl, {PlacementKind::HighEntropyPlacement, 3}, scan, cfg);
  CHECK(pose_diff(truth, again) == 0.0);

  // An object without ambiguous viewpoints cannot satisfy the mode.
  const auto peg = builtin_object("peg-asym");
  const auto peg_scan = offline_entropy_scan(peg, cfg.scan_views, cfg.scan_radius);
  CHECK_THROWS_AS(place_object(peg, {PlacementKind::HighEntropyPlacement, 3}, peg_scan, cfg),
                  NoAmbiguousView);
  CHECK_THROWS_AS(place_object(cyl, {PlacementKind::HighEntropyPlacement, 3}, {}, cfg),
                  std::invalid_argument);
}

TEST_CASE("the judge measures errors of the most probable hypothesis") {
  const auto peg = builtin_object("peg-asym");
  const SuccessCriteria crit;
  Pose truth;
  truth.translation = {0.05, -0.02, 0.02};
  truth.rotation = rotation_about_axis(Eigen::Vector3d::UnitZ(), 0.3);

  const auto exact = judge_details(single_estimate(truth, Pose{}), truth, crit, peg);
  CHECK(exact.success_orbit);
  CHECK(exact.success_raw);
  CHECK(exact.translation_error < 1e-12);
  CHECK(exact.rotation_error_raw < 1e-9);

  Pose shifted = truth;
  shifted.translation.x() += 0.006;
  const auto off = judge_details(single_estimate(shifted, Pose{}), truth, crit, peg);
  CHECK_FALSE(off.success_orbit);
  CHECK_FALSE(off.success_raw);
  CHECK(off.translation_error == doctest::Approx(0.006).epsilon(1e-12));

  Pose tilted = truth;
  tilted.rotation = rotation_about_axis(Eigen::Vector3d::UnitX(), deg_to_rad(4.0)) * truth.rotation;
  const auto ok = judge_details(single_estimate(tilted, Pose{}), truth, crit, peg);
  CHECK(ok.success_raw);
  CHECK(ok.rotation_error_raw == doctest::Approx(deg_to_rad(4.0)).epsilon(1e-9));

  tilted.rotation = rotation_about_axis(Eigen::Vector3d::UnitX(), deg_to_rad(6.0)) * truth.rotation;
  const auto bad = judge_details(single_estimate(tilted, Pose{}), truth, crit, peg);
  CHECK_FALSE(bad.success_raw);
  CHECK_FALSE(bad.success_orbit);
}

TEST_CASE("the orbit judge forgives symmetry-equivalent rotations, the raw judge does not") {
  const auto cyl = builtin_object("cyl-4fold");
  const SuccessCriteria crit;
  Pose truth;
  truth.translation = {0.0, 0.0, 0.02};

  Pose quarter = truth;
  quarter.rotation = truth.rotation * rotation_about_axis(Eigen::Vector3d::UnitZ(), M_PI / 2.0);
  const auto r = judge_details(single_estimate(quarter, Pose{}), truth, crit, cyl);
  CHECK(r.success_orbit);
  CHECK_FALSE(r.success_raw);
  CHECK(r.rotation_error_orbit < 1e-9);
  CHECK(r.rotation_error_raw == doctest::Approx(M_PI / 2.0).epsilon(1e-9));

  // The same quarter turn on an asymmetric object fails both judges.
  const auto peg = builtin_object("peg-asym");
  const auto p = judge_details(single_estimate(quarter, Pose{}), truth, crit, peg);
  CHECK_FALSE(p.success_orbit);
  CHECK_FALSE(p.success_raw);
}

TEST_CASE("the judge resolves probability ties toward the earliest hypothesis") {
  const auto peg = builtin_object("peg-asym");
  const SuccessCriteria crit;
  Pose truth;
  truth.translation = {0.01, 0.0, 0.02};
  Pose wrong = truth;
  wrong.translation.x() += 0.1;

  PoseHypothesisSet tie;
  tie.source_view.camera = Pose{};
  tie.hypotheses.push_back({truth, 0.5});
  tie.hypotheses.push_back({wrong, 0.5});
  CHECK(judge_details(tie, truth, crit, peg).success_raw);

  PoseHypothesisSet ranked;
  ranked.source_view.camera = Pose{};
  ranked.hypotheses.push_back({wrong, 0.4});
  ranked.hypotheses.push_back({truth, 0.6});
  CHECK(judge_details(ranked, truth, crit, peg).success_raw);

  // The judged pose is expressed through the source camera.
  const Pose cam = camera_look_at({0.3, 0.1, 0.4}, {0.0, 0.0, 0.02});
  const Pose in_camera = compose(invert(cam), truth);
  CHECK(judge_details(single_estimate(in_camera, cam), truth, crit, peg).success_raw);

  PoseHypothesisSet empty;
  CHECK_THROWS_AS(judge_details(empty, truth, crit, peg), std::invalid_argument);
  SuccessCriteria broken;
  broken.max_translation_error = 0.0;
  CHECK_THROWS_AS(judge_details(single_estimate(truth, Pose{}), truth, broken, peg),
                  std::invalid_argument);
}

TEST_CASE("success thresholds are strict inequalities") {
  const auto peg = builtin_object("peg-asym");
  SuccessCriteria crit;
  Pose truth;
  truth.translation = {0.0, 0.0, 0.02};
  Pose at_limit = truth;
  at_limit.translation.x() += crit.max_translation_error;
  const auto r = judge_details(single_estimate(at_limit, Pose{}), truth, crit, peg);
  CHECK(r.translation_error == crit.max_translation_error);
  CHECK_FALSE(r.success_raw);

  CHECK(judge_estimate(single_estimate(truth, Pose{}), truth, crit, peg, true));
  CHECK(judge_estimate(single_estimate(truth, Pose{}), truth, crit, peg, false));
}

TEST_CASE("estimation benchmark separates methods on ambiguous objects") {
  BenchConfig cfg;
  cfg.noise = EstimatorNoise{0.0, 0.0, 0};
  const std::vector<ObjectModel> objects{builtin_object("cyl-4fold"),
                                         builtin_object("peg-asym")};
  const auto report = run_estimation_benchmark(
      {EstimationMethod::FixedView, EstimationMethod::ActiveNBV}, objects,
      {PlacementKind::HighEntropyPlacement}, 3, cfg, 2024);

  CHECK(report.suite == "estimation");
  CHECK(report.master_seed == 2024);
  REQUIRE(report.trials.size() == 12);
  REQUIRE(report.cells.size() == 4);

  const auto& fixed_cyl = report.cells[0];
  CHECK(fixed_cyl.method == "FixedView");
  CHECK(fixed_cyl.object == "cyl-4fold");
  CHECK(fixed_cyl.trials == 3);
  // Orbit-aware success forgives the symmetry orbit; the raw judge exposes
  // that a fixed view cannot pick the right element from a uniform tie.
  CHECK(fixed_cyl.sr == 1.0);
  CHECK(fixed_cyl.sr_raw == 0.0);

  const auto& fixed_peg = report.cells[1];
  CHECK_FALSE(fixed_peg.applicable);
  CHECK(fixed_peg.successes == 0);

  const auto& active_cyl = report.cells[2];
  CHECK(active_cyl.method == "ActiveNBV");
  CHECK(active_cyl.sr == 1.0);
  CHECK(active_cyl.sr_raw == 1.0);
  for (int t = 0; t < 3; ++t) {
    CHECK(report.trials[6 + t].moved);
    CHECK(report.trials[6 + t].success_raw);
  }

  // Aggregates match a manual count over the trial rows.
  int successes = 0;
  for (int t = 0; t < 3; ++t) successes += report.trials[t].success ? 1 : 0;
  CHECK(fixed_cyl.successes == successes);

  // The raw judge flips FixedView successes off when used as the headline metric.
  BenchConfig raw_cfg = cfg;
  raw_cfg.orbit_aware_judge = false;
  const auto raw = run_estimation_benchmark({EstimationMethod::FixedView},
                                            {builtin_object("cyl-4fold")},
                                            {PlacementKind::HighEntropyPlacement}, 3,
                                            raw_cfg, 2024);
  CHECK(raw.cells[0].sr == 0.0);
}

TEST_CASE("trial seeds derive from the suite coordinates and the master seed") {
  BenchConfig cfg;
  const auto report = run_estimation_benchmark({EstimationMethod::RandomNBV},
                                               {builtin_object("cyl-4fold")},
                                               {PlacementKind::RandomPlacement}, 2, cfg, 99);
  REQUIRE(report.trials.size() == 2);
  CHECK(report.trials[0].trial_seed ==
        fnv1a_hash("est|RandomNBV|cyl-4fold|RandomPlacement|0", 99));
  CHECK(report.trials[1].trial_seed ==
        fnv1a_hash("est|RandomNBV|cyl-4fold|RandomPlacement|1", 99));
}

TEST_CASE("estimation runs and their CSV are reproducible under one master seed") {
  BenchConfig cfg;
  const std::vector<ObjectModel> objects{builtin_object("cyl-4fold")};
  const std::vector<PlacementKind> modes{PlacementKind::RandomPlacement,
                                         PlacementKind::HighEntropyPlacement};
  const auto a = run_estimation_benchmark({EstimationMethod::RandomNBV, EstimationMethod::ActiveNBV},
                                          objects, modes, 4, cfg, 31);
  const auto b = run_estimation_benchmark({EstimationMethod::RandomNBV, EstimationMethod::ActiveNBV},
                                          objects, modes, 4, cfg, 31);
  CHECK(trials_csv(a) == trials_csv(b));
  const auto c = run_estimation_benchmark({EstimationMethod::RandomNBV, EstimationMethod::ActiveNBV},
                                          objects, modes, 4, cfg, 32);
  CHECK(trials_csv(a) != trials_csv(c));
}

TEST_CASE("estimation CSV carries one schema row and twelve columns per trial") {
  BenchConfig cfg;
  cfg.noise = EstimatorNoise{0.0, 0.0, 0};
  const auto report = run_estimation_benchmark(
      {EstimationMethod::FixedView}, {builtin_object("peg-asym"), builtin_object("cyl-4fold")},
      {PlacementKind::HighEntropyPlacement}, 2, cfg, 5);

  const auto lines = split_lines(trials_csv(report));
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] ==
        "method,object,mode,trial,seed,applicable,moved,success,success_raw,"
        "translation_error,rotation_error_orbit,rotation_error_raw");

  // peg-asym rows are inapplicable: flag 0 and the numeric fields left empty.
  const auto peg_row = split_fields(lines[1]);
  REQUIRE(peg_row.size() == 12);
  CHECK(peg_row[0] == "FixedView");
  CHECK(peg_row[1] == "peg-asym");
  CHECK(peg_row[5] == "0");
  for (std::size_t i = 6; i < 12; ++i) CHECK(peg_row[i].empty());

  const auto cyl_row = split_fields(lines[3]);
  REQUIRE(cyl_row.size() == 12);
  CHECK(cyl_row[1] == "cyl-4fold");
  CHECK(cyl_row[5] == "1");
  CHECK(cyl_row[7] == "1");   // orbit success
  CHECK(cyl_row[8] == "0");   // raw failure on the uniform tie
  CHECK(std::stod(cyl_row[9]) < 1e-9);
}

TEST_CASE("report json snapshots the configuration and the cell aggregates") {
  BenchConfig cfg;
  cfg.noise = EstimatorNoise{0.0, 0.0, 0};
  const auto report =
      run_estimation_benchmark({EstimationMethod::FixedView}, {builtin_object("cyl-4fold")},
                               {PlacementKind::HighEntropyPlacement}, 2, cfg, 11);
  const auto j = nlohmann::json::parse(report_json(report, cfg));
  CHECK(j["suite"] == "estimation");
  CHECK(j["master_seed"] == 11);
  CHECK(j["trial_count"] == 2);
  CHECK(j["config"]["nbv"]["tau"] == 0.5);
  CHECK(j["config"]["nbv"]["m"] == 12);
  CHECK(j["config"]["orbit_aware_judge"] == true);
  CHECK(j["config"]["tracker"]["horizon"] == 20);
  CHECK(j["config"]["tracker"]["approach_gain"] == doctest::Approx(0.15));
  CHECK(j["config"]["tracker"]["lock_distance"] == doctest::Approx(0.015));
  REQUIRE(j["cells"].size() == 1);
  CHECK(j["cells"][0]["method"] == "FixedView");
  CHECK(j["cells"][0]["trials"] == 2);
  CHECK(j["cells"][0]["sr"] == 1.0);
  CHECK(j["cells"][0]["sr_raw"] == 0.0);
}

TEST_CASE("write_report emits both files and is byte-stable across rewrites") {
  BenchConfig cfg;
  cfg.noise = EstimatorNoise{0.0, 0.0, 0};
  const auto report =
      run_estimation_benchmark({EstimationMethod::FixedView}, {builtin_object("cyl-4fold")},
                               {PlacementKind::HighEntropyPlacement}, 2, cfg, 17);

  const auto dir = std::filesystem::temp_directory_path() / "activepose_test_bench";
  std::filesystem::remove_all(dir);
  write_report(dir.string(), report, cfg);
  const auto csv_path = dir / "estimation_trials.csv";
  const auto json_path = dir / "estimation_report.json";
  REQUIRE(std::filesystem::exists(csv_path));
  REQUIRE(std::filesystem::exists(json_path));
  CHECK(slurp(csv_path) == trials_csv(report));
  CHECK(slurp(json_path) == report_json(report, cfg));

  const auto first_csv = slurp(csv_path);
  write_report(dir.string(), report, cfg);
  CHECK(slurp(csv_path) == first_csv);
  std::filesystem::remove_all(dir);
}

TEST_CASE("tracking benchmark runs the baselines with single-step planning") {
  BenchConfig cfg;
  cfg.noise = EstimatorNoise{0.0, 0.0, 0};
  Checkpoint unused;  // baselines never touch the denoiser
  const auto report = run_tracking_benchmark(
      {TrackingMethod::PoseServo, TrackingMethod::WorldCamera}, {ScenarioKind::LinearMotion}, 2,
      cfg, unused, 7);

  CHECK(report.suite == "tracking");
  REQUIRE(report.trials.size() == 4);
  for (const auto& t : report.trials) {
    CHECK(t.applicable);
    CHECK(t.planner_calls == 200);
    CHECK(t.object == "peg-asym");
    CHECK(t.scenario == "LinearMotion");
  }
  CHECK(report.trials[0].method == "PoseServo");
  CHECK(report.trials[2].method == "WorldCamera");

  const auto lines = split_lines(trials_csv(report));
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] == "method,object,scenario,trial,seed,success,pose_loss_events,planner_calls");
  const auto row = split_fields(lines[1]);
  REQUIRE(row.size() == 8);
  CHECK(row[7] == "200");

  const auto again = run_tracking_benchmark(
      {TrackingMethod::PoseServo, TrackingMethod::WorldCamera}, {ScenarioKind::LinearMotion}, 2,
      cfg, unused, 7);
  CHECK(trials_csv(again) == trials_csv(report));
}

TEST_CASE("the servo baseline holds the vantage while the world camera loses wide motion") {
  BenchConfig cfg;
  cfg.noise = EstimatorNoise{0.0, 0.0, 0};
  Checkpoint unused;
  const auto report = run_tracking_benchmark(
      {TrackingMethod::PoseServo, TrackingMethod::WorldCamera}, {ScenarioKind::LinearMotion}, 6,
      cfg, unused, 1234);
  REQUIRE(report.cells.size() == 2);
  const auto& servo = report.cells[0];
  const auto& world = report.cells[1];
  CHECK(servo.method == "PoseServo");
  CHECK(world.method == "WorldCamera");
  // A camera that follows the object beats one bolted above the table center.
  CHECK(servo.sr >= world.sr);
  CHECK(servo.sr > 0.0);
}

TEST_CASE("combined episodes report estimation and tracking bookkeeping together") {
  BenchConfig cfg;
  const auto params = init_params(cfg.tracker.history, cfg.tracker.horizon, 16, 8, 0.4, 3);
  Checkpoint ckpt;
  ckpt.params = params;
  const auto report = run_combined_benchmark(2, cfg, ckpt, 88);

  CHECK(report.suite == "combined");
  REQUIRE(report.trials.size() == 2);
  for (const auto& t : report.trials) {
    CHECK(t.method == "EstimateThenTrack");
    CHECK(t.object == "peg-asym");
    CHECK(t.scenario == "LinearMotion");
    CHECK(t.planner_calls == 40);
    CHECK_FALSE(t.moved);  // the asymmetric peg never trips the ambiguity gate
  }
  CHECK(report.trials[0].trial_seed == fnv1a_hash("combined|0", 88));

  const auto lines = split_lines(trials_csv(report));
  REQUIRE(lines.size() == 3);
  CHECK(split_fields(lines[1]).size() == 8);

  CHECK_THROWS_AS(run_combined_benchmark(0, cfg, ckpt, 88), std::invalid_argument);
  CHECK_THROWS_AS(
      run_estimation_benchmark({}, {builtin_object("peg-asym")},
                               {PlacementKind::RandomPlacement}, 1, cfg, 1),
      std::invalid_argument);
  CHECK_THROWS_AS(run_tracking_benchmark({TrackingMethod::PoseServo}, {}, 1, cfg, ckpt, 1),
                  std::invalid_argument);
}
