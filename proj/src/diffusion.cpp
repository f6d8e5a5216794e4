#include "activepose/diffusion.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace activepose {

namespace {

using nlohmann::json;

double cosine_alpha_bar(int k, int n) {
  const double s = 0.008;
  const auto f = [&](double x) {
    const double c = std::cos((x / n + s) / (1.0 + s) * M_PI / 2.0);
    return c * c;
  };
  return f(static_cast<double>(k)) / f(0.0);
}

Eigen::MatrixXd silu(const Eigen::MatrixXd& z) {
  return z.array() / (1.0 + (-z.array()).exp());
}

Eigen::MatrixXd silu_derivative(const Eigen::MatrixXd& z) {
  const Eigen::ArrayXXd sig = 1.0 / (1.0 + (-z.array()).exp());
  return (sig * (1.0 + z.array() * (1.0 - sig))).matrix();
}

json pose_json(const Pose& p) {
  const auto v = pose_to_seven(p);
  return std::vector<double>(v.begin(), v.end());
}

Pose pose_from_json(const json& j) {
  if (!j.is_array() || j.size() != 7) throw std::invalid_argument("expected a 7-number pose");
  std::array<double, 7> v;
  for (int i = 0; i < 7; ++i) v[i] = j[i].get<double>();
  return pose_from_seven(v);
}

std::vector<double> matrix_to_flat(const Eigen::MatrixXd& m) {
  std::vector<double> out;
  out.reserve(m.size());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  }
  return out;
}

Eigen::MatrixXd matrix_from_flat(const std::vector<double>& v, Eigen::Index rows,
                                 Eigen::Index cols) {
  if (static_cast<Eigen::Index>(v.size()) != rows * cols) {
    throw std::runtime_error("checkpoint weight array has the wrong size");
  }
  Eigen::MatrixXd m(rows, cols);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = v[i++];
  }
  return m;
}

template <typename M>
void adamw_update(M& param, const M& grad, M& m, M& v, double lr, double weight_decay,
                  int step) {
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = (beta2 * v.array() + (1.0 - beta2) * grad.array().square()).matrix();
  const double bc1 = 1.0 - std::pow(beta1, step);
  const double bc2 = 1.0 - std::pow(beta2, step);
  param.array() -= lr * ((m.array() / bc1) / ((v.array() / bc2).sqrt() + eps) +
                         weight_decay * param.array());
}

}  // namespace

NoiseSchedule make_schedule(int n_steps, ScheduleKind kind, double eta) {
  if (n_steps < 1) throw std::invalid_argument("make_schedule: n_steps must be >= 1");
  if (eta < 0 || eta > 1) throw std::invalid_argument("make_schedule: eta outside [0,1]");
  if (kind != ScheduleKind::Cosine) throw std::invalid_argument("make_schedule: unknown kind");

  NoiseSchedule s;
  s.n_steps = n_steps;
  s.eta = eta;
  s.alpha_hat.resize(n_steps + 1);
  s.beta_hat.resize(n_steps + 1);
  s.alpha.assign(n_steps + 1, 0.0);
  s.gamma.assign(n_steps + 1, 0.0);
  s.sigma.assign(n_steps + 1, 0.0);

  std::vector<double> alpha_bar(n_steps + 1);
  for (int k = 0; k <= n_steps; ++k) {
    alpha_bar[k] = cosine_alpha_bar(k, n_steps);
    s.alpha_hat[k] = std::sqrt(alpha_bar[k]);
    s.beta_hat[k] = std::sqrt(1.0 - alpha_bar[k]);
  }
  for (int k = 1; k <= n_steps; ++k) {
    s.alpha[k] = s.alpha_hat[k - 1] / s.alpha_hat[k];
    s.gamma[k] = s.beta_hat[k] - s.alpha_hat[k] / s.alpha_hat[k - 1] * s.beta_hat[k - 1];
    if (eta > 0) {
      s.sigma[k] = eta *
                   std::sqrt((1.0 - alpha_bar[k - 1]) / (1.0 - alpha_bar[k])) *
                   std::sqrt(1.0 - alpha_bar[k] / alpha_bar[k - 1]);
    }
  }
  return s;
}

ActionChunk encode_chunk(const std::vector<Pose>& poses, double trans_scale) {
  if (!(trans_scale > 0)) throw std::invalid_argument("encode_chunk: trans_scale must be > 0");
  ActionChunk chunk;
  chunk.flat.resize(9 * static_cast<Eigen::Index>(poses.size()));
  for (std::size_t i = 0; i < poses.size(); ++i) {
    chunk.flat.segment<3>(9 * i) = poses[i].translation / trans_scale;
    const Rot6D r = rot6d_from_rotation(poses[i].rotation);
    for (int j = 0; j < 6; ++j) chunk.flat[9 * i + 3 + j] = r.v[j];
  }
  return chunk;
}

std::vector<Pose> decode_chunk(const ActionChunk& chunk, double trans_scale) {
  if (!(trans_scale > 0)) throw std::invalid_argument("decode_chunk: trans_scale must be > 0");
  if (chunk.flat.size() % 9 != 0) {
    throw std::invalid_argument("decode_chunk: flat size is not a multiple of 9");
  }
  std::vector<Pose> poses(chunk.horizon());
  for (int i = 0; i < chunk.horizon(); ++i) {
    poses[i].translation = trans_scale * chunk.flat.segment<3>(9 * i);
    Rot6D r;
    for (int j = 0; j < 6; ++j) r.v[j] = chunk.flat[9 * i + 3 + j];
    poses[i].rotation = rotation_from_rot6d(r);
  }
  return poses;
}

std::pair<Observation, Pose> canonicalize(const Observation& obs) {
  if (obs.ee_poses.empty() || obs.ee_poses.size() != obs.object_poses.size()) {
    throw std::invalid_argument("canonicalize: observation needs equal, non-empty pose lists");
  }
  const Pose anchor = obs.ee_poses.back();
  const Pose anchor_inv = invert(anchor);
  Observation local;
  local.object_poses.reserve(obs.object_poses.size());
  local.ee_poses.reserve(obs.ee_poses.size());
  for (const Pose& p : obs.object_poses) local.object_poses.push_back(compose(anchor_inv, p));
  for (const Pose& p : obs.ee_poses) local.ee_poses.push_back(compose(anchor_inv, p));
  return {local, anchor};
}

Eigen::VectorXd encode_observation(const Observation& local_obs, double trans_scale) {
  if (!(trans_scale > 0)) {
    throw std::invalid_argument("encode_observation: trans_scale must be > 0");
  }
  const std::size_t h = local_obs.object_poses.size();
  if (h == 0 || local_obs.ee_poses.size() != h) {
    throw std::invalid_argument("encode_observation: observation needs equal pose lists");
  }
  Eigen::VectorXd out(18 * static_cast<Eigen::Index>(h));
  const auto put = [&](Eigen::Index offset, const Pose& p) {
    out.segment<3>(offset) = p.translation / trans_scale;
    const Rot6D r = rot6d_from_rotation(p.rotation);
    for (int j = 0; j < 6; ++j) out[offset + 3 + j] = r.v[j];
  };
  for (std::size_t i = 0; i < h; ++i) {
    put(18 * i, local_obs.object_poses[i]);
    put(18 * i + 9, local_obs.ee_poses[i]);
  }
  return out;
}

Eigen::VectorXd forward_noising(const Eigen::VectorXd& clean, int k, const Eigen::VectorXd& eps,
                                const NoiseSchedule& s) {
  if (k < 0 || k > s.n_steps) throw std::invalid_argument("forward_noising: k out of range");
  if (eps.size() != clean.size()) {
    throw std::invalid_argument("forward_noising: eps dimension mismatch");
  }
  return s.alpha_hat[k] * clean + s.beta_hat[k] * eps;
}

Eigen::VectorXd reverse_step(const Eigen::VectorXd& noisy, int k,
                             const Eigen::VectorXd& predicted_clean, const NoiseSchedule& s,
                             RandomStream& rng) {
  if (k < 1 || k > s.n_steps) throw std::invalid_argument("reverse_step: k out of range");
  if (noisy.size() != predicted_clean.size()) {
    throw std::invalid_argument("reverse_step: dimension mismatch");
  }
  if (s.beta_hat[k] < 1e-12) {
    throw DegenerateStep("reverse_step: beta_hat vanishes at step " + std::to_string(k));
  }
  const Eigen::VectorXd eps_hat = (noisy - s.alpha_hat[k] * predicted_clean) / s.beta_hat[k];
  const double sigma = s.sigma[k];
  const double eps_coeff =
      std::sqrt(std::max(0.0, s.beta_hat[k - 1] * s.beta_hat[k - 1] - sigma * sigma));
  Eigen::VectorXd out = s.alpha_hat[k - 1] * predicted_clean + eps_coeff * eps_hat;
  if (sigma > 0) out += sigma * rng.gaussian_vec(static_cast<int>(noisy.size()));
  return out;
}

std::string DenoiserParams::architecture_hash() const {
  const std::string desc = "fc2-silu:h=" + std::to_string(history) +
                           ":k=" + std::to_string(horizon) +
                           ":w=" + std::to_string(hidden_width) +
                           ":embed=" + std::to_string(step_embed_dim) +
                           ":steps=" + std::to_string(n_steps);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a_hash(desc)));
  return buf;
}

DenoiserParams init_params(int history, int horizon, int hidden_width, int n_steps,
                           double trans_scale, std::uint64_t seed) {
  if (history < 1 || horizon < 1 || hidden_width < 1 || n_steps < 1 || !(trans_scale > 0)) {
    throw std::invalid_argument("init_params: all dimensions must be positive");
  }
  DenoiserParams p;
  p.history = history;
  p.horizon = horizon;
  p.hidden_width = hidden_width;
  p.n_steps = n_steps;
  p.trans_scale = trans_scale;

  RandomStream rng(seed);
  const auto kaiming = [&](Eigen::Index rows, Eigen::Index cols) {
    const double bound = std::sqrt(6.0 / static_cast<double>(cols));
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
      for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.uniform(-bound, bound);
    }
    return m;
  };
  p.w1 = kaiming(hidden_width, p.input_dim());
  p.w2 = kaiming(hidden_width, hidden_width);
  p.w3 = kaiming(p.output_dim(), hidden_width);
  p.b1 = Eigen::VectorXd::Zero(hidden_width);
  p.b2 = Eigen::VectorXd::Zero(hidden_width);
  p.b3 = Eigen::VectorXd::Zero(p.output_dim());
  return p;
}

Eigen::VectorXd step_embedding(int k, int dim) {
  if (dim < 2 || dim % 2 != 0) throw std::invalid_argument("step_embedding: dim must be even");
  Eigen::VectorXd e(dim);
  const int half = dim / 2;
  for (int i = 0; i < half; ++i) {
    const double freq = std::pow(10000.0, -static_cast<double>(i) / half);
    e[2 * i] = std::sin(k * freq);
    e[2 * i + 1] = std::cos(k * freq);
  }
  return e;
}

Eigen::VectorXd denoiser_forward(const DenoiserParams& params,
                                 const Eigen::VectorXd& obs_features,
                                 const Eigen::VectorXd& noisy_chunk, int k) {
  Eigen::VectorXd in(params.input_dim());
  in << obs_features, noisy_chunk, step_embedding(k, params.step_embed_dim);
  const Eigen::VectorXd h1 = silu(params.w1 * in + params.b1);
  const Eigen::VectorXd h2 = silu(params.w2 * h1 + params.b2);
  return params.w3 * h2 + params.b3;
}

double loss_on_batch(const DenoiserParams& params, const Eigen::MatrixXd& obs_features,
                     const Eigen::MatrixXd& clean, const std::vector<int>& ks,
                     const Eigen::MatrixXd& eps, const NoiseSchedule& s, DenoiserGrads* grads) {
  const Eigen::Index batch = obs_features.cols();
  if (batch == 0) throw std::invalid_argument("loss_on_batch: empty batch");
  if (clean.cols() != batch || eps.cols() != batch ||
      ks.size() != static_cast<std::size_t>(batch)) {
    throw std::invalid_argument("loss_on_batch: batch size mismatch");
  }
  if (obs_features.rows() != 18 * params.history || clean.rows() != params.output_dim() ||
      eps.rows() != clean.rows()) {
    throw std::invalid_argument("loss_on_batch: feature dimension mismatch");
  }

  Eigen::MatrixXd in(params.input_dim(), batch);
  for (Eigen::Index i = 0; i < batch; ++i) {
    const int k = ks[i];
    if (k < 1 || k > s.n_steps) throw std::invalid_argument("loss_on_batch: k out of range");
    in.block(0, i, obs_features.rows(), 1) = obs_features.col(i);
    in.block(obs_features.rows(), i, clean.rows(), 1) =
        s.alpha_hat[k] * clean.col(i) + s.beta_hat[k] * eps.col(i);
    in.block(obs_features.rows() + clean.rows(), i, params.step_embed_dim, 1) =
        step_embedding(k, params.step_embed_dim);
  }

  const Eigen::MatrixXd z1 = (params.w1 * in).colwise() + params.b1;
  const Eigen::MatrixXd h1 = silu(z1);
  const Eigen::MatrixXd z2 = (params.w2 * h1).colwise() + params.b2;
  const Eigen::MatrixXd h2 = silu(z2);
  const Eigen::MatrixXd out = (params.w3 * h2).colwise() + params.b3;

  const Eigen::MatrixXd residual = out - clean;
  const double loss_value = residual.squaredNorm() / static_cast<double>(batch);

  if (grads) {
    const Eigen::MatrixXd d_out = (2.0 / static_cast<double>(batch)) * residual;
    grads->w3 = d_out * h2.transpose();
    grads->b3 = d_out.rowwise().sum();
    const Eigen::MatrixXd d_z2 =
        (params.w3.transpose() * d_out).cwiseProduct(silu_derivative(z2));
    grads->w2 = d_z2 * h1.transpose();
    grads->b2 = d_z2.rowwise().sum();
    const Eigen::MatrixXd d_z1 =
        (params.w2.transpose() * d_z2).cwiseProduct(silu_derivative(z1));
    grads->w1 = d_z1 * in.transpose();
    grads->b1 = d_z1.rowwise().sum();
  }
  return loss_value;
}

double loss(const DenoiserParams& params, const std::vector<TrainingSample>& batch,
            const NoiseSchedule& s, RandomStream& rng) {
  if (batch.empty()) throw std::invalid_argument("loss: empty batch");
  const Eigen::Index b = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd obs_features(18 * params.history, b);
  Eigen::MatrixXd clean(params.output_dim(), b);
  Eigen::MatrixXd eps(params.output_dim(), b);
  std::vector<int> ks(batch.size());
  for (Eigen::Index i = 0; i < b; ++i) {
    obs_features.col(i) = encode_observation(batch[i].local_obs, params.trans_scale);
    clean.col(i) = batch[i].clean.flat;
    ks[i] = static_cast<int>(rng.uniform_int(1, s.n_steps));
    eps.col(i) = rng.gaussian_vec(params.output_dim());
  }
  return loss_on_batch(params, obs_features, clean, ks, eps, s, nullptr);
}

DenoiserParams train(const PreparedDataset& dataset, const TrainConfig& cfg,
                     std::vector<double>* loss_curve) {
  if (dataset.samples.empty()) throw std::invalid_argument("train: empty dataset");
  if (cfg.batch_size < 1 || cfg.learning_rate <= 0 || cfg.epochs < 0 || cfg.n_steps < 1 ||
      cfg.hidden_width < 1 || cfg.history < 1 || cfg.horizon < 1 || cfg.weight_decay < 0) {
    throw std::invalid_argument("train: invalid config");
  }
  if (dataset.history != cfg.history || dataset.horizon != cfg.horizon) {
    throw std::invalid_argument("train: dataset window sizes do not match config");
  }

  DenoiserParams params = init_params(cfg.history, cfg.horizon, cfg.hidden_width, cfg.n_steps,
                                      dataset.trans_scale, cfg.seed);
  const NoiseSchedule schedule = make_schedule(cfg.n_steps);

  const Eigen::Index n = static_cast<Eigen::Index>(dataset.samples.size());
  Eigen::MatrixXd obs_features(18 * cfg.history, n);
  Eigen::MatrixXd clean(params.output_dim(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    obs_features.col(i) =
        encode_observation(dataset.samples[i].local_obs, dataset.trans_scale);
    clean.col(i) = dataset.samples[i].clean.flat;
  }

  RandomStream rng(fnv1a_hash("train-loop", cfg.seed));
  DenoiserGrads grads;
  DenoiserGrads m{Eigen::MatrixXd::Zero(params.w1.rows(), params.w1.cols()),
                  Eigen::MatrixXd::Zero(params.w2.rows(), params.w2.cols()),
                  Eigen::MatrixXd::Zero(params.w3.rows(), params.w3.cols()),
                  Eigen::VectorXd::Zero(params.b1.size()),
                  Eigen::VectorXd::Zero(params.b2.size()),
                  Eigen::VectorXd::Zero(params.b3.size())};
  DenoiserGrads v = m;

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  int adam_step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (Eigen::Index i = n - 1; i > 0; --i) {
      const auto j = static_cast<Eigen::Index>(rng.uniform_int(0, i));
      std::swap(order[i], order[j]);
    }

    double epoch_loss = 0.0;
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const Eigen::Index b = std::min<Eigen::Index>(cfg.batch_size, n - start);
      Eigen::MatrixXd batch_obs(obs_features.rows(), b);
      Eigen::MatrixXd batch_clean(clean.rows(), b);
      Eigen::MatrixXd batch_eps(clean.rows(), b);
      std::vector<int> ks(b);
      for (Eigen::Index i = 0; i < b; ++i) {
        batch_obs.col(i) = obs_features.col(order[start + i]);
        batch_clean.col(i) = clean.col(order[start + i]);
        ks[i] = static_cast<int>(rng.uniform_int(1, cfg.n_steps));
        batch_eps.col(i) = rng.gaussian_vec(static_cast<int>(clean.rows()));
      }

      const double batch_loss =
          loss_on_batch(params, batch_obs, batch_clean, ks, batch_eps, schedule, &grads);
      if (!std::isfinite(batch_loss)) throw NonFiniteLoss(epoch);
      epoch_loss += batch_loss * static_cast<double>(b);

      ++adam_step;
      adamw_update(params.w1, grads.w1, m.w1, v.w1, cfg.learning_rate, cfg.weight_decay,
                   adam_step);
      adamw_update(params.w2, grads.w2, m.w2, v.w2, cfg.learning_rate, cfg.weight_decay,
                   adam_step);
      adamw_update(params.w3, grads.w3, m.w3, v.w3, cfg.learning_rate, cfg.weight_decay,
                   adam_step);
      adamw_update(params.b1, grads.b1, m.b1, v.b1, cfg.learning_rate, cfg.weight_decay,
                   adam_step);
      adamw_update(params.b2, grads.b2, m.b2, v.b2, cfg.learning_rate, cfg.weight_decay,
                   adam_step);
      adamw_update(params.b3, grads.b3, m.b3, v.b3, cfg.learning_rate, cfg.weight_decay,
                   adam_step);
    }
    if (loss_curve) loss_curve->push_back(epoch_loss / static_cast<double>(n));
  }
  return params;
}

Eigen::VectorXd sample_chunk(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&, int)>& predict_clean, int dim,
    const NoiseSchedule& s, RandomStream& rng) {
  Eigen::VectorXd x = rng.gaussian_vec(dim);
  for (int k = s.n_steps; k >= 1; --k) {
    x = reverse_step(x, k, predict_clean(x, k), s, rng);
  }
  return x;
}

std::vector<Pose> sample(const DenoiserParams& params, const Observation& obs,
                         const NoiseSchedule& s, RandomStream& rng) {
  if (obs.ee_poses.size() != static_cast<std::size_t>(params.history)) {
    throw std::invalid_argument("sample: observation length does not match params.history");
  }
  const auto [local_obs, anchor] = canonicalize(obs);
  const Eigen::VectorXd features = encode_observation(local_obs, params.trans_scale);
  const auto predict = [&](const Eigen::VectorXd& noisy, int k) {
    return denoiser_forward(params, features, noisy, k);
  };
  ActionChunk chunk;
  chunk.flat = sample_chunk(predict, params.output_dim(), s, rng);
  std::vector<Pose> world;
  world.reserve(params.horizon);
  for (const Pose& local : decode_chunk(chunk, params.trans_scale)) {
    world.push_back(compose(anchor, local));
  }
  return world;
}

void write_dataset(const std::string& path, const std::vector<TimestepRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset to " + path);
  for (const auto& r : records) {
    json j;
    j["t"] = r.t;
    j["object_pose"] = pose_json(r.object_pose);
    j["ee_pose"] = pose_json(r.ee_pose);
    j["scenario"] = r.scenario;
    j["demo_id"] = r.demo_id;
    out << j.dump() << "\n";
  }
}

std::vector<TimestepRecord> read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path);
  std::vector<TimestepRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    TimestepRecord r;
    r.t = j.at("t").get<double>();
    r.object_pose = pose_from_json(j.at("object_pose"));
    r.ee_pose = pose_from_json(j.at("ee_pose"));
    r.scenario = j.at("scenario").get<std::string>();
    r.demo_id = j.at("demo_id").get<int>();
    records.push_back(std::move(r));
  }
  return records;
}

PreparedDataset make_training_samples(const std::vector<TimestepRecord>& records, int history,
                                      int horizon) {
  if (history < 1 || horizon < 1) {
    throw std::invalid_argument("make_training_samples: history and horizon must be >= 1");
  }

  struct Window {
    Observation local_obs;
    std::vector<Pose> local_future;
  };
  std::vector<Window> windows;

  std::size_t begin = 0;
  const auto flush = [&](std::size_t end) {
    const auto len = static_cast<std::ptrdiff_t>(end - begin);
    for (std::ptrdiff_t t = history - 1; t + horizon < len; ++t) {
      Observation obs;
      for (int i = 0; i < history; ++i) {
        const auto& rec = records[begin + t - history + 1 + i];
        obs.object_poses.push_back(rec.object_pose);
        obs.ee_poses.push_back(rec.ee_pose);
      }
      Window w;
      Pose anchor;
      std::tie(w.local_obs, anchor) = canonicalize(obs);
      const Pose anchor_inv = invert(anchor);
      for (int i = 1; i <= horizon; ++i) {
        w.local_future.push_back(compose(anchor_inv, records[begin + t + i].ee_pose));
      }
      windows.push_back(std::move(w));
    }
    begin = end;
  };

  for (std::size_t i = 1; i <= records.size(); ++i) {
    if (i == records.size() || records[i].scenario != records[begin].scenario ||
        records[i].demo_id != records[begin].demo_id) {
      flush(i);
    }
  }

  double max_coord = 0.0;
  for (const auto& w : windows) {
    for (const Pose& p : w.local_obs.object_poses) {
      max_coord = std::max(max_coord, p.translation.cwiseAbs().maxCoeff());
    }
    for (const Pose& p : w.local_obs.ee_poses) {
      max_coord = std::max(max_coord, p.translation.cwiseAbs().maxCoeff());
    }
    for (const Pose& p : w.local_future) {
      max_coord = std::max(max_coord, p.translation.cwiseAbs().maxCoeff());
    }
  }

  PreparedDataset dataset;
  dataset.history = history;
  dataset.horizon = horizon;
  dataset.trans_scale = max_coord < 1e-12 ? 1.0 : max_coord;
  dataset.samples.reserve(windows.size());
  for (auto& w : windows) {
    TrainingSample sample;
    sample.local_obs = std::move(w.local_obs);
    sample.clean = encode_chunk(w.local_future, dataset.trans_scale);
    dataset.samples.push_back(std::move(sample));
  }
  return dataset;
}

void save_checkpoint(const std::string& path, const DenoiserParams& params,
                     const TrainConfig& config, const std::vector<double>& loss_curve) {
  json j;
  j["format"] = "denoiser-checkpoint";
  j["version"] = 1;
  j["architecture_hash"] = params.architecture_hash();
  j["history"] = params.history;
  j["horizon"] = params.horizon;
  j["hidden_width"] = params.hidden_width;
  j["n_steps"] = params.n_steps;
  j["step_embed_dim"] = params.step_embed_dim;
  j["trans_scale"] = params.trans_scale;
  j["train_config"] = {{"batch_size", config.batch_size},
                       {"learning_rate", config.learning_rate},
                       {"epochs", config.epochs},
                       {"n_steps", config.n_steps},
                       {"seed", config.seed},
                       {"hidden_width", config.hidden_width},
                       {"history", config.history},
                       {"horizon", config.horizon},
                       {"weight_decay", config.weight_decay}};
  j["weights"] = {{"w1", matrix_to_flat(params.w1)}, {"b1", matrix_to_flat(params.b1)},
                  {"w2", matrix_to_flat(params.w2)}, {"b2", matrix_to_flat(params.b2)},
                  {"w3", matrix_to_flat(params.w3)}, {"b3", matrix_to_flat(params.b3)}};
  j["loss_curve"] = loss_curve;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint to " + path);
  out << j.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  const json j = json::parse(in);
  if (j.value("format", "") != "denoiser-checkpoint") {
    throw std::runtime_error("not a denoiser checkpoint: " + path);
  }

  Checkpoint ckpt;
  DenoiserParams& p = ckpt.params;
  p.history = j.at("history").get<int>();
  p.horizon = j.at("horizon").get<int>();
  p.hidden_width = j.at("hidden_width").get<int>();
  p.n_steps = j.at("n_steps").get<int>();
  p.step_embed_dim = j.at("step_embed_dim").get<int>();
  p.trans_scale = j.at("trans_scale").get<double>();
  if (j.at("architecture_hash").get<std::string>() != p.architecture_hash()) {
    throw std::runtime_error("checkpoint architecture hash mismatch: " + path);
  }

  const json& w = j.at("weights");
  const auto vec = [&](const char* key) { return w.at(key).get<std::vector<double>>(); };
  p.w1 = matrix_from_flat(vec("w1"), p.hidden_width, p.input_dim());
  p.b1 = matrix_from_flat(vec("b1"), p.hidden_width, 1);
  p.w2 = matrix_from_flat(vec("w2"), p.hidden_width, p.hidden_width);
  p.b2 = matrix_from_flat(vec("b2"), p.hidden_width, 1);
  p.w3 = matrix_from_flat(vec("w3"), p.output_dim(), p.hidden_width);
  p.b3 = matrix_from_flat(vec("b3"), p.output_dim(), 1);

  const json& c = j.at("train_config");
  ckpt.config.batch_size = c.at("batch_size").get<int>();
  ckpt.config.learning_rate = c.at("learning_rate").get<double>();
  ckpt.config.epochs = c.at("epochs").get<int>();
  ckpt.config.n_steps = c.at("n_steps").get<int>();
  ckpt.config.seed = c.at("seed").get<std::uint64_t>();
  ckpt.config.hidden_width = c.at("hidden_width").get<int>();
  ckpt.config.history = c.at("history").get<int>();
  ckpt.config.horizon = c.at("horizon").get<int>();
  ckpt.config.weight_decay = c.at("weight_decay").get<double>();
  ckpt.loss_curve = j.value("loss_curve", std::vector<double>{});
  return ckpt;
}

}  // namespace activepose
