#include "activepose/nbv.hpp"

#include <cmath>
#include <stdexcept>

#include "activepose/random.hpp"

namespace activepose {

std::vector<EntropyView> offline_entropy_scan(const ObjectModel& object, int n_views,
                                              double radius) {
  const CameraIntrinsics intrinsics = default_intrinsics();
  const Pose object_pose = Pose::identity();
  std::vector<EntropyView> out;
  out.reserve(n_views);
  for (const Pose& camera : sample_view_sphere(n_views, radius, Eigen::Vector3d::Zero())) {
    EntropyView ev;
    ev.view = render_descriptor(object, object_pose, camera, intrinsics, {}, 0.0);
    ev.entropy = entropy(estimate(object, ev.view));
    out.push_back(std::move(ev));
  }
  return out;
}

double fused_score(double entropy, double p_amb, double lambda) {
  if (p_amb < 0 || p_amb > 1) throw std::invalid_argument("fused_score: p_amb outside [0,1]");
  if (entropy < 0) throw std::invalid_argument("fused_score: negative entropy");
  if (lambda < 0 || lambda > 1) throw std::invalid_argument("fused_score: lambda outside [0,1]");
  return lambda * entropy + (1.0 - lambda) * p_amb;
}

int select_nbv(const std::vector<CandidateScore>& candidates, const Pose& current_camera) {
  if (candidates.empty()) throw std::invalid_argument("select_nbv: no candidates");
  int best = 0;
  double best_dist =
      geodesic_rotation_distance(candidates[0].camera.rotation, current_camera.rotation);
  for (int i = 1; i < static_cast<int>(candidates.size()); ++i) {
    const double delta = candidates[i].score - candidates[best].score;
    if (delta < -1e-12) {
      best = i;
      best_dist = geodesic_rotation_distance(candidates[i].camera.rotation,
                                             current_camera.rotation);
    } else if (delta < 1e-12) {
      const double dist =
          geodesic_rotation_distance(candidates[i].camera.rotation, current_camera.rotation);
      if (dist < best_dist) {
        best = i;
        best_dist = dist;
      }
    }
  }
  return best;
}

namespace {

/// The hypothesis carrying the identity symmetry element, i.e. the raw
/// estimator anchor. Hypotheses parallel indistinguishable_set order.
Pose anchor_hypothesis(const ObjectModel& object, const PoseHypothesisSet& est) {
  const auto symmetries = indistinguishable_set(object, est.source_view);
  for (std::size_t i = 0; i < symmetries.size(); ++i) {
    if ((symmetries[i] - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= 1e-9) {
      return est.hypotheses[i].pose;
    }
  }
  throw std::logic_error("hypothesis set is missing the identity element");
}

}  // namespace

NBVResult run_active_estimation(const ObjectModel& object, const Pose& true_object_pose,
                                const Pose& initial_camera, const GeometricPrompt& prompt,
                                const AmbiguityScorer& scorer, const NBVConfig& config,
                                const EstimatorNoise& noise) {
  if (!prompt.object_name.empty() && prompt.object_name != object.name) {
    throw std::invalid_argument("run_active_estimation: prompt built for " + prompt.object_name +
                                ", not " + object.name);
  }
  if (config.m < 1) throw std::invalid_argument("run_active_estimation: m must be >= 1");

  const CameraIntrinsics intrinsics = default_intrinsics();
  const ViewDescriptor live =
      render_descriptor(object, true_object_pose, initial_camera, intrinsics, {}, 0.0);
  const PoseHypothesisSet initial_estimate = estimate(object, live, noise);

  NBVResult result;
  result.initial_p_amb = scorer.score(live, prompt).p_amb;
  if (result.initial_p_amb < config.tau) {
    result.final_estimate = initial_estimate;
    result.moved = false;
    return result;
  }

  // Imagine the object at the current best estimate, mapped into the world.
  const Pose believed_pose = compose(initial_camera, anchor_hypothesis(object, initial_estimate));
  const auto candidates =
      sample_view_sphere(config.m, config.candidate_radius, believed_pose.translation);

  result.candidate_scores.reserve(candidates.size());
  for (int j = 0; j < static_cast<int>(candidates.size()); ++j) {
    const ViewDescriptor imagined =
        render_descriptor(object, believed_pose, candidates[j], intrinsics, {}, 0.0);
    const PoseHypothesisSet imagined_estimate = estimate(object, imagined);

    CandidateScore cs;
    cs.index = j;
    cs.camera = candidates[j];
    cs.p_amb = scorer.score(imagined, prompt).p_amb;
    cs.entropy_nats = entropy(imagined_estimate);
    cs.entropy_normalized = normalized_entropy(imagined_estimate, object);
    cs.score = fused_score(
        config.use_normalized_entropy ? cs.entropy_normalized : cs.entropy_nats, cs.p_amb,
        config.lambda);
    result.candidate_scores.push_back(cs);
  }

  const int chosen = select_nbv(result.candidate_scores, initial_camera);
  EstimatorNoise final_noise = noise;
  if (noise.translation_sigma > 0 || noise.rotation_sigma > 0) {
    final_noise.seed = fnv1a_hash("nbv-re-estimate", noise.seed);
  }
  const ViewDescriptor live_after_move =
      render_descriptor(object, true_object_pose, candidates[chosen], intrinsics, {}, 0.0);
  result.final_estimate = estimate(object, live_after_move, final_noise);
  result.moved = true;
  result.chosen_index = chosen;
  return result;
}

}  // namespace activepose
