#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "activepose/nbv.hpp"
#include "activepose/random.hpp"
#include "test_util.hpp"

using namespace activepose;
using namespace activepose::testutil;

namespace {

GeometricPrompt prompt_for(const ObjectModel& object) {
  const auto scan = offline_entropy_scan(object, 64, 0.4);
  return build_prompt(scan, 3, 1, object.name);
}

Pose camera_from(const Eigen::Vector3d& target, const Eigen::Vector3d& direction,
                 double distance = 0.4) {
  return camera_look_at(target + distance * direction.normalized(), target);
}

CandidateScore candidate(int index, double score, double rotation_deg) {
  CandidateScore cs;
  cs.index = index;
  cs.camera.rotation = rotation_about_axis(Eigen::Vector3d::UnitY(), deg_to_rad(rotation_deg));
  cs.score = score;
  return cs;
}

}  // namespace

TEST_CASE("fused_score is the convex blend of entropy and ambiguity") {
  for (double h : {0.0, 0.3, 1.0, 1.5}) {
    for (double p : {0.0, 0.25, 0.75, 1.0}) {
      for (double lambda : {0.0, 0.4, 0.6, 1.0}) {
        CHECK(std::abs(fused_score(h, p, lambda) - (lambda * h + (1.0 - lambda) * p)) < 1e-12);
      }
    }
  }
  CHECK(fused_score(1.0, 0.75, 0.6) == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("fused_score validates its inputs") {
  CHECK_THROWS_AS(fused_score(0.5, -0.01, 0.6), std::invalid_argument);
  CHECK_THROWS_AS(fused_score(0.5, 1.01, 0.6), std::invalid_argument);
  CHECK_THROWS_AS(fused_score(-0.1, 0.5, 0.6), std::invalid_argument);
  CHECK_THROWS_AS(fused_score(0.5, 0.5, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(fused_score(0.5, 0.5, 1.1), std::invalid_argument);
}

TEST_CASE("select_nbv takes the minimum score") {
  std::vector<CandidateScore> cs = {candidate(0, 0.9, 0), candidate(1, 0.2, 45),
                                    candidate(2, 0.5, 90), candidate(3, 0.21, 10)};
  CHECK(select_nbv(cs, Pose::identity()) == 1);

  // Positive scaling keeps gaps above the tie window, so the argmin is stable.
  for (auto& c : cs) c.score *= 3.7;
  CHECK(select_nbv(cs, Pose::identity()) == 1);
}

TEST_CASE("select_nbv ties break on rotation distance, then index") {
  // Scores equal to within 1e-12; candidate 2 needs the smallest rotation.
  std::vector<CandidateScore> cs = {candidate(0, 0.4, 90), candidate(1, 0.4, 40),
                                    candidate(2, 0.4 + 5e-13, 5)};
  CHECK(select_nbv(cs, Pose::identity()) == 2);

  // Identical candidates: the first one wins.
  std::vector<CandidateScore> same = {candidate(0, 0.4, 30), candidate(1, 0.4, 30)};
  CHECK(select_nbv(same, Pose::identity()) == 0);

  CHECK_THROWS_AS(select_nbv({}, Pose::identity()), std::invalid_argument);
}

TEST_CASE("offline entropy scan covers the view sphere in order") {
  const ObjectModel cyl = builtin_object("cyl-4fold");
  const auto scan = offline_entropy_scan(cyl, 64, 0.4);
  REQUIRE(scan.size() == 64);

  const auto sphere = sample_view_sphere(64, 0.4, Eigen::Vector3d::Zero());
  int ambiguous = 0;
  int resolved = 0;
  for (std::size_t i = 0; i < scan.size(); ++i) {
    CHECK(pose_diff(scan[i].view.camera, sphere[i]) == 0.0);
    // A 4-fold object yields either certainty or the full orbit.
    if (scan[i].entropy == 0.0) {
      ++resolved;
    } else {
      CHECK(std::abs(scan[i].entropy - std::log(4.0)) < 1e-12);
      ++ambiguous;
    }
  }
  CHECK(ambiguous > 0);
  CHECK(resolved > 0);

  // An asymmetric object is never ambiguous.
  for (const auto& ev : offline_entropy_scan(builtin_object("peg-asym"), 64, 0.4)) {
    CHECK(ev.entropy == 0.0);
  }
}

TEST_CASE("an ambiguous start triggers a move that resolves the pose exactly") {
  const ObjectModel cyl = builtin_object("cyl-4fold");
  const auto prompt = prompt_for(cyl);
  const OracleScorer scorer(cyl);

  Pose truth;
  truth.translation = {0.05, -0.03, 0.02};
  const Pose start = camera_from(truth.translation, {-1, 0, 0.3});

  const auto result =
      run_active_estimation(cyl, truth, start, prompt, scorer, NBVConfig{});

  CHECK(result.moved);
  REQUIRE(result.chosen_index.has_value());
  CHECK(result.initial_p_amb == doctest::Approx(0.75).epsilon(1e-12));
  REQUIRE(result.candidate_scores.size() == 12);

  // Candidates orbit the believed object position at the configured radius.
  int zero_score = 0;
  for (const auto& cs : result.candidate_scores) {
    CHECK((cs.camera.translation - truth.translation).norm() ==
          doctest::Approx(0.4).epsilon(1e-9));
    if (cs.score == 0.0) {
      ++zero_score;
      CHECK(cs.p_amb == 0.0);
      CHECK(cs.entropy_nats == 0.0);
    }
  }
  CHECK(zero_score > 0);
  CHECK(result.candidate_scores[*result.chosen_index].score == 0.0);

  // Zero noise: the re-estimate is certain and equals the true pose in world.
  REQUIRE(result.final_estimate.hypotheses.size() == 1);
  const Pose world = compose(result.final_estimate.source_view.camera,
                             result.final_estimate.hypotheses[0].pose);
  CHECK(pose_diff(world, truth) < 1e-9);
}

TEST_CASE("an unambiguous start keeps the camera in place") {
  const ObjectModel cyl = builtin_object("cyl-4fold");
  const auto prompt = prompt_for(cyl);
  const OracleScorer scorer(cyl);

  const Pose start = camera_from(Eigen::Vector3d::Zero(), {1, 0, 0.3});
  const auto result =
      run_active_estimation(cyl, Pose::identity(), start, prompt, scorer, NBVConfig{});

  CHECK_FALSE(result.moved);
  CHECK_FALSE(result.chosen_index.has_value());
  CHECK(result.initial_p_amb == 0.0);
  CHECK(result.candidate_scores.empty());
  REQUIRE(result.final_estimate.hypotheses.size() == 1);
  CHECK(pose_diff(result.final_estimate.source_view.camera, start) == 0.0);
}

TEST_CASE("raising tau above the oracle ambiguity gates the move off") {
  const ObjectModel cyl = builtin_object("cyl-4fold");
  const auto prompt = prompt_for(cyl);
  const OracleScorer scorer(cyl);

  NBVConfig config;
  config.tau = 0.8;  // above the 4-fold oracle score of 0.75
  const Pose start = camera_from(Eigen::Vector3d::Zero(), {-1, 0, 0.3});
  const auto result =
      run_active_estimation(cyl, Pose::identity(), start, prompt, scorer, config);

  CHECK_FALSE(result.moved);
  CHECK(result.initial_p_amb == doctest::Approx(0.75));
  CHECK(result.final_estimate.hypotheses.size() == 4);
}

TEST_CASE("imagined candidate entropies match real renders when the belief is exact") {
  const ObjectModel cyl = builtin_object("cyl-4fold");
  const auto prompt = prompt_for(cyl);
  const OracleScorer scorer(cyl);

  Pose truth;
  truth.translation = {-0.02, 0.04, 0.0};
  const Pose start = camera_from(truth.translation, {-1, 0, 0.3});
  const auto result =
      run_active_estimation(cyl, truth, start, prompt, scorer, NBVConfig{});

  REQUIRE(result.moved);
  for (const auto& cs : result.candidate_scores) {
    const auto real =
        render_descriptor(cyl, truth, cs.camera, default_intrinsics(), {}, 0.0);
    CHECK(std::abs(entropy(estimate(cyl, real)) - cs.entropy_nats) < 1e-12);
  }
}

TEST_CASE("raw-entropy fusion uses nats rather than the normalized value") {
  const ObjectModel ring = builtin_object("ring-cont");
  const auto prompt = prompt_for(ring);
  const OracleScorer scorer(ring);

  NBVConfig config;
  config.lambda = 1.0;  // score == entropy term, isolating the switch
  config.use_normalized_entropy = false;
  const Pose start = camera_from(Eigen::Vector3d::Zero(), {-1, 0, 0.3});
  const auto result =
      run_active_estimation(ring, Pose::identity(), start, prompt, scorer, config);

  REQUIRE(result.moved);
  double max_score = 0.0;
  for (const auto& cs : result.candidate_scores) max_score = std::max(max_score, cs.score);
  // An 8-fold ambiguous view scores ln 8, impossible on the normalized scale.
  CHECK(max_score == doctest::Approx(std::log(8.0)).epsilon(1e-9));
}

TEST_CASE("estimator noise stays deterministic through the NBV round") {
  const ObjectModel cyl = builtin_object("cyl-4fold");
  const auto prompt = prompt_for(cyl);
  const OracleScorer scorer(cyl);

  const Pose start = camera_from(Eigen::Vector3d::Zero(), {-1, 0, 0.3});
  const EstimatorNoise noise{0.002, deg_to_rad(1.0), 11};
  const auto a = run_active_estimation(cyl, Pose::identity(), start, prompt, scorer,
                                       NBVConfig{}, noise);
  const auto b = run_active_estimation(cyl, Pose::identity(), start, prompt, scorer,
                                       NBVConfig{}, noise);

  REQUIRE(a.moved);
  REQUIRE(a.final_estimate.hypotheses.size() == b.final_estimate.hypotheses.size());
  for (std::size_t i = 0; i < a.final_estimate.hypotheses.size(); ++i) {
    CHECK(pose_diff(a.final_estimate.hypotheses[i].pose,
                    b.final_estimate.hypotheses[i].pose) == 0.0);
  }

  EstimatorNoise reseeded = noise;
  reseeded.seed = 12;
  const auto c = run_active_estimation(cyl, Pose::identity(), start, prompt, scorer,
                                       NBVConfig{}, reseeded);
  CHECK(pose_diff(a.final_estimate.hypotheses[0].pose,
                  c.final_estimate.hypotheses[0].pose) > 0.0);
}

TEST_CASE("mismatched prompts and degenerate configs are rejected") {
  const ObjectModel cyl = builtin_object("cyl-4fold");
  const OracleScorer scorer(cyl);
  const Pose start = camera_from(Eigen::Vector3d::Zero(), {-1, 0, 0.3});

  GeometricPrompt wrong;
  wrong.object_name = "peg-asym";
  CHECK_THROWS_AS(run_active_estimation(cyl, Pose::identity(), start, wrong, scorer,
                                        NBVConfig{}),
                  std::invalid_argument);

  NBVConfig bad;
  bad.m = 0;
  CHECK_THROWS_AS(run_active_estimation(cyl, Pose::identity(), start, GeometricPrompt{},
                                        scorer, bad),
                  std::invalid_argument);
}
