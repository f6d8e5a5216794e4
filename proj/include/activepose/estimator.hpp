#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "activepose/geometry.hpp"
#include "activepose/scene.hpp"

namespace activepose {

/// Thrown when an estimate is requested for a view with no part of the
/// object in the frustum. Callers treat it as a pose-loss signal, distinct
/// from an ambiguous (multi-hypothesis) result.
struct EmptyView : std::runtime_error {
  explicit EmptyView(const std::string& what) : std::runtime_error(what) {}
};

struct PoseHypothesis {
  Pose pose;           // object in camera frame
  double probability;  // nonnegative, set sums to 1
};

struct PoseHypothesisSet {
  std::vector<PoseHypothesis> hypotheses;
  ViewDescriptor source_view;
};

/// Seeded perturbation applied to the estimate anchor. Zero sigmas leave the
/// anchor bitwise untouched.
struct EstimatorNoise {
  double translation_sigma = 0.0;  // meters
  double rotation_sigma = 0.0;     // radians
  std::uint64_t seed = 0;
};

/// Mock pose estimator: one hypothesis per symmetry rotation that leaves the
/// visible feature constellation unchanged, uniform probabilities. Throws
/// EmptyView when the object is fully out of view.
PoseHypothesisSet estimate(const ObjectModel& object, const ViewDescriptor& descriptor,
                           const EstimatorNoise& noise = {});

/// Shannon entropy in nats, with the convention 0 * ln 0 = 0.
double entropy(const std::vector<double>& probabilities);
double entropy(const PoseHypothesisSet& h);

/// entropy(h) / ln(|symmetry_group|), so maximal ambiguity maps to 1.
/// Returns 0 for a trivial group.
double normalized_entropy(const PoseHypothesisSet& h, const ObjectModel& object);

}  // namespace activepose
