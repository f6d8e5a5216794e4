#pragma once

#include <optional>
#include <vector>

#include "activepose/ambiguity.hpp"
#include "activepose/estimator.hpp"
#include "activepose/scene.hpp"

namespace activepose {

struct NBVConfig {
  double tau = 0.5;     // ambiguity threshold; p_amb >= tau triggers a move
  double lambda = 0.6;  // fusion weight between entropy and p_amb
  int m = 12;           // candidate camera poses
  double candidate_radius = 0.4;  // meters from the estimated object center
  bool use_normalized_entropy = true;
};

struct CandidateScore {
  int index = 0;
  Pose camera;
  double p_amb = 0.0;
  double entropy_nats = 0.0;
  double entropy_normalized = 0.0;
  double score = 0.0;
};

struct NBVResult {
  PoseHypothesisSet final_estimate;
  bool moved = false;
  std::optional<int> chosen_index;
  double initial_p_amb = 0.0;
  std::vector<CandidateScore> candidate_scores;  // empty when moved is false
};

/// Renders the object at identity from a Fibonacci view sphere and records
/// the zero-noise estimator entropy of each view, in view-index order.
std::vector<EntropyView> offline_entropy_scan(const ObjectModel& object, int n_views,
                                              double radius);

/// lambda * entropy + (1 - lambda) * p_amb.
double fused_score(double entropy, double p_amb, double lambda);

/// Index of the minimum score. Scores within 1e-12 tie-break by geodesic
/// rotation distance from the current camera, then by index.
int select_nbv(const std::vector<CandidateScore>& candidates, const Pose& current_camera);

/// One round of active estimation: estimate from the initial view, gate on
/// the scorer's ambiguity, and if gated, imagine the object (at the current
/// estimate) from m candidate views, pick the best fused score, and
/// re-estimate from there.
NBVResult run_active_estimation(const ObjectModel& object, const Pose& true_object_pose,
                                const Pose& initial_camera, const GeometricPrompt& prompt,
                                const AmbiguityScorer& scorer, const NBVConfig& config,
                                const EstimatorNoise& noise = {});

}  // namespace activepose
