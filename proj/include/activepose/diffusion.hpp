#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "activepose/geometry.hpp"
#include "activepose/random.hpp"

namespace activepose {

struct DegenerateStep : std::runtime_error {
  explicit DegenerateStep(const std::string& what) : std::runtime_error(what) {}
};

struct NonFiniteLoss : std::runtime_error {
  explicit NonFiniteLoss(int epoch_index)
      : std::runtime_error("non-finite loss at epoch " + std::to_string(epoch_index)),
        epoch(epoch_index) {}
  int epoch;
};

enum class ScheduleKind { Cosine };

/// Variance-preserving noise schedule. alpha_hat/beta_hat are indexed by
/// step k in [0, n_steps] with alpha_hat[0] = 1; the per-step alpha, gamma,
/// sigma arrays leave index 0 unused.
struct NoiseSchedule {
  int n_steps = 0;
  double eta = 0.0;  // 0 = deterministic DDIM
  std::vector<double> alpha_hat;
  std::vector<double> beta_hat;
  std::vector<double> alpha;
  std::vector<double> gamma;
  std::vector<double> sigma;
};

NoiseSchedule make_schedule(int n_steps, ScheduleKind kind = ScheduleKind::Cosine,
                            double eta = 0.0);

/// H past object poses and H past end-effector poses, base frame, oldest
/// first.
struct Observation {
  std::vector<Pose> object_poses;
  std::vector<Pose> ee_poses;
};

/// K future end-effector poses, each flattened to 9 numbers: translation
/// (divided by trans_scale) followed by the Rot6D encoding.
struct ActionChunk {
  Eigen::VectorXd flat;
  int horizon() const { return static_cast<int>(flat.size()) / 9; }
};

ActionChunk encode_chunk(const std::vector<Pose>& poses, double trans_scale);
std::vector<Pose> decode_chunk(const ActionChunk& chunk, double trans_scale);

/// Re-expresses every pose relative to the most recent end-effector pose
/// (the anchor), which becomes the identity. Applying any global rigid
/// transform to the input leaves the local observation unchanged.
std::pair<Observation, Pose> canonicalize(const Observation& obs);

/// Flattens a canonicalized observation to 18 numbers per frame: object
/// pose (scaled translation + Rot6D), then end-effector pose likewise.
Eigen::VectorXd encode_observation(const Observation& local_obs, double trans_scale);

/// alpha_hat_k * clean + beta_hat_k * eps.
Eigen::VectorXd forward_noising(const Eigen::VectorXd& clean, int k, const Eigen::VectorXd& eps,
                                const NoiseSchedule& s);

/// One reverse-diffusion step from level k to k-1 given the network's clean
/// sample prediction. The implied noise (noisy - alpha_hat_k * prediction) /
/// beta_hat_k is reapplied at level k-1, which with sigma = 0 is the
/// deterministic DDIM update.
Eigen::VectorXd reverse_step(const Eigen::VectorXd& noisy, int k,
                             const Eigen::VectorXd& predicted_clean, const NoiseSchedule& s,
                             RandomStream& rng);

/// Two-hidden-layer SiLU network predicting the clean action chunk from the
/// canonicalized observation, the noisy chunk, and a sinusoidal embedding of
/// the step index.
struct DenoiserParams {
  int history = 2;
  int horizon = 20;
  int hidden_width = 128;
  int n_steps = 16;
  int step_embed_dim = 16;
  double trans_scale = 1.0;
  Eigen::MatrixXd w1, w2, w3;
  Eigen::VectorXd b1, b2, b3;

  int input_dim() const { return 18 * history + 9 * horizon + step_embed_dim; }
  int output_dim() const { return 9 * horizon; }
  std::string architecture_hash() const;
};

struct DenoiserGrads {
  Eigen::MatrixXd w1, w2, w3;
  Eigen::VectorXd b1, b2, b3;
};

DenoiserParams init_params(int history, int horizon, int hidden_width, int n_steps,
                           double trans_scale, std::uint64_t seed);

Eigen::VectorXd step_embedding(int k, int dim);

Eigen::VectorXd denoiser_forward(const DenoiserParams& params,
                                 const Eigen::VectorXd& obs_features,
                                 const Eigen::VectorXd& noisy_chunk, int k);

/// One canonicalized training pair: observation poses in the anchor frame
/// and the matching clean chunk already encoded.
struct TrainingSample {
  Observation local_obs;
  ActionChunk clean;
};

struct PreparedDataset {
  std::vector<TrainingSample> samples;
  double trans_scale = 1.0;
  int history = 0;
  int horizon = 0;
};

struct TrainConfig {
  int batch_size = 40;
  double learning_rate = 3e-4;
  int epochs = 2000;
  int n_steps = 16;
  std::uint64_t seed = 0;
  int hidden_width = 128;
  int history = 2;
  int horizon = 20;
  double weight_decay = 1e-4;
};

/// Mean over the batch of the squared distance between the predicted and
/// true clean chunks, at per-item noise levels ks with per-item noise eps.
/// Fills grads with analytic gradients when non-null.
double loss_on_batch(const DenoiserParams& params, const Eigen::MatrixXd& obs_features,
                     const Eigen::MatrixXd& clean, const std::vector<int>& ks,
                     const Eigen::MatrixXd& eps, const NoiseSchedule& s, DenoiserGrads* grads);

/// Same loss with the noise level and noise drawn from rng per item.
double loss(const DenoiserParams& params, const std::vector<TrainingSample>& batch,
            const NoiseSchedule& s, RandomStream& rng);

/// Minibatch AdamW over the prepared dataset. Deterministic given cfg.seed.
/// Appends the per-epoch mean loss to loss_curve when non-null.
DenoiserParams train(const PreparedDataset& dataset, const TrainConfig& cfg,
                     std::vector<double>* loss_curve = nullptr);

/// Runs the reverse chain from Gaussian noise using an arbitrary clean-
/// sample predictor. Exposed so tests can wire in oracle predictors.
Eigen::VectorXd sample_chunk(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&, int)>& predict_clean, int dim,
    const NoiseSchedule& s, RandomStream& rng);

/// Full policy sampling: canonicalize, denoise from Gaussian noise, decode,
/// and map the K end-effector poses back to the world frame.
std::vector<Pose> sample(const DenoiserParams& params, const Observation& obs,
                         const NoiseSchedule& s, RandomStream& rng);

/// One JSONL dataset record.
struct TimestepRecord {
  double t = 0.0;
  Pose object_pose;  // base frame
  Pose ee_pose;      // base frame
  std::string scenario;
  int demo_id = 0;
};

void write_dataset(const std::string& path, const std::vector<TimestepRecord>& records);
std::vector<TimestepRecord> read_dataset(const std::string& path);

/// Slices demonstrations into (H-frame observation, K-frame future) windows,
/// canonicalizes each, and computes the shared translation scale (the
/// largest canonicalized translation coordinate across the dataset).
PreparedDataset make_training_samples(const std::vector<TimestepRecord>& records, int history,
                                      int horizon);

struct Checkpoint {
  DenoiserParams params;
  TrainConfig config;
  std::vector<double> loss_curve;
};

void save_checkpoint(const std::string& path, const DenoiserParams& params,
                     const TrainConfig& config, const std::vector<double>& loss_curve);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace activepose
