#include "activepose/estimator.hpp"

#include <cmath>

#include "activepose/random.hpp"

namespace activepose {

PoseHypothesisSet estimate(const ObjectModel& object, const ViewDescriptor& descriptor,
                           const EstimatorNoise& noise) {
  if (noise.translation_sigma < 0 || noise.rotation_sigma < 0) {
    throw std::invalid_argument("estimate: noise sigmas must be >= 0");
  }
  if (!descriptor.object_in_view) {
    throw EmptyView("estimate: object " + object.name + " is not in view");
  }

  Pose anchor = descriptor.object_in_camera;
  if (noise.translation_sigma > 0 || noise.rotation_sigma > 0) {
    RandomStream rng(noise.seed);
    anchor.translation += noise.translation_sigma * rng.gaussian_vec3();
    const Eigen::Vector3d axis = rng.unit_vector();
    const double angle = noise.rotation_sigma * rng.gaussian();
    anchor.rotation = rotation_about_axis(axis, angle) * anchor.rotation;
  }

  const auto symmetries = indistinguishable_set(object, descriptor);
  PoseHypothesisSet out;
  out.source_view = descriptor;
  out.hypotheses.reserve(symmetries.size());
  const double p = 1.0 / static_cast<double>(symmetries.size());
  for (const auto& g : symmetries) {
    PoseHypothesis h;
    h.pose.rotation = anchor.rotation * g;
    h.pose.translation = anchor.translation;
    h.probability = p;
    out.hypotheses.push_back(h);
  }
  return out;
}

double entropy(const std::vector<double>& probabilities) {
  if (probabilities.empty()) throw std::invalid_argument("entropy: empty distribution");
  double sum = 0.0;
  double h = 0.0;
  for (const double p : probabilities) {
    if (p < 0) throw std::invalid_argument("entropy: negative probability");
    sum += p;
    if (p > 0) h -= p * std::log(p);
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("entropy: probabilities do not sum to 1");
  }
  return h;
}

double entropy(const PoseHypothesisSet& h) {
  std::vector<double> probs;
  probs.reserve(h.hypotheses.size());
  for (const auto& hyp : h.hypotheses) probs.push_back(hyp.probability);
  return entropy(probs);
}

double normalized_entropy(const PoseHypothesisSet& h, const ObjectModel& object) {
  const std::size_t n = object.symmetry_group.size();
  if (n <= 1) return 0.0;
  return entropy(h) / std::log(static_cast<double>(n));
}

}  // namespace activepose
