#pragma once

#include <semaphore>
#include <stdexcept>
#include <string>
#include <vector>

#include "activepose/scene.hpp"

namespace activepose {

/// A rendered view paired with its estimator entropy, as produced by the
/// offline entropy scan.
struct EntropyView {
  ViewDescriptor view;
  double entropy = 0.0;
};

struct PromptView {
  ViewDescriptor view;
  double entropy = 0.0;
  int source_index = 0;  // position in the scan list the view came from
};

/// Geometry-aware prompt: reference views the scorer can compare the live
/// view against. Unambiguous views carry the lowest entropies, ambiguous
/// views the highest; the two sets never overlap.
struct GeometricPrompt {
  std::string object_name;
  std::vector<PromptView> unambiguous;
  std::vector<PromptView> ambiguous;
};

struct AmbiguityScore {
  double p_amb = 0.0;  // in [0, 1]
  std::string scorer_id;
  double latency = 0.0;  // seconds
};

struct RemoteScorerConfig {
  std::string endpoint;        // e.g. http://127.0.0.1:8080/score
  std::string auth_token_env;  // environment variable holding a bearer token
  double timeout = 5.0;        // seconds
  int max_retries = 2;         // attempts beyond the first
  int max_concurrent = 4;
  bool strict_range = true;  // reject scores outside [0,1] instead of clamping
};

struct InsufficientViews : std::invalid_argument {
  explicit InsufficientViews(const std::string& what) : std::invalid_argument(what) {}
};

struct ScorerError : std::runtime_error {
  explicit ScorerError(const std::string& what) : std::runtime_error(what) {}
};
struct Timeout : ScorerError {
  explicit Timeout(const std::string& what) : ScorerError(what) {}
};
struct Unreachable : ScorerError {
  explicit Unreachable(const std::string& what) : ScorerError(what) {}
};
struct MalformedResponse : ScorerError {
  explicit MalformedResponse(const std::string& what) : ScorerError(what) {}
};

/// Selects the u_count lowest-entropy views and, from the rest, the a_count
/// highest-entropy views. Ties break by view index ascending.
GeometricPrompt build_prompt(const std::vector<EntropyView>& views, int u_count, int a_count,
                             const std::string& object_name = "");

class AmbiguityScorer {
 public:
  virtual ~AmbiguityScorer() = default;
  virtual AmbiguityScore score(const ViewDescriptor& descriptor,
                               const GeometricPrompt& prompt) const = 0;
};

/// Geometric stand-in for the VLM: p_amb = 1 - 1/|indistinguishable set|.
class OracleScorer : public AmbiguityScorer {
 public:
  explicit OracleScorer(ObjectModel object);
  AmbiguityScore score(const ViewDescriptor& descriptor,
                       const GeometricPrompt& prompt) const override;

 private:
  ObjectModel object_;
};

/// HTTP client for an external scorer. Sends view summaries, expects a
/// response document with a numeric "ambiguous_probability" field. Retries
/// Timeout, Unreachable, and MalformedResponse up to max_retries, then
/// surfaces the last error. At most max_concurrent requests are in flight.
class RemoteScorer : public AmbiguityScorer {
 public:
  explicit RemoteScorer(RemoteScorerConfig config);
  AmbiguityScore score(const ViewDescriptor& descriptor,
                       const GeometricPrompt& prompt) const override;

 private:
  RemoteScorerConfig config_;
  mutable std::counting_semaphore<4096> slots_;
};

AmbiguityScore score_ambiguity(const AmbiguityScorer& scorer, const ViewDescriptor& descriptor,
                               const GeometricPrompt& prompt);

/// Serialized forms used by the remote wire format and the prompt export.
std::string render_prompt_json(const GeometricPrompt& prompt, int indent = 2);
std::string render_score_request(const GeometricPrompt& prompt, const ViewDescriptor& live_view);
void export_prompt(const std::string& path, const GeometricPrompt& prompt);

}  // namespace activepose
