#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string_view>

namespace activepose {

/// Deterministic random stream. All distributions are implemented on top of
/// the raw mt19937_64 output so that identical seeds give identical draws on
/// every platform (the std:: distribution adapters are implementation-defined).
class RandomStream {
public:
  explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [lo, hi], inclusive. Rejection sampling, no modulo bias.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
    std::uint64_t x = gen_();
    while (x >= limit) x = gen_();
    return lo + static_cast<std::int64_t>(x % range);
  }

  /// Standard normal via Box-Muller; the second value of each pair is cached.
  double gaussian() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

  Eigen::Vector3d gaussian_vec3() {
    return {gaussian(), gaussian(), gaussian()};
  }

  Eigen::VectorXd gaussian_vec(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = gaussian();
    return v;
  }

  /// Uniform direction on the unit sphere.
  Eigen::Vector3d unit_vector() {
    const double z = uniform(-1.0, 1.0);
    const double phi = uniform(0.0, 2.0 * M_PI);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {r * std::cos(phi), r * std::sin(phi), z};
  }

  /// Uniform random rotation (Shoemake quaternion method).
  Eigen::Matrix3d random_rotation() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double u3 = uniform01();
    const double a = std::sqrt(1.0 - u1);
    const double b = std::sqrt(u1);
    Eigen::Quaterniond q(a * std::sin(2.0 * M_PI * u2), a * std::cos(2.0 * M_PI * u2),
                         b * std::sin(2.0 * M_PI * u3), b * std::cos(2.0 * M_PI * u3));
    q.normalize();
    return q.toRotationMatrix();
  }

private:
  std::mt19937_64 gen_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

/// FNV-1a over a string key; used to derive independent per-trial seeds from
/// a master seed plus cell labels.
inline std::uint64_t fnv1a_hash(std::string_view key, std::uint64_t basis = 14695981039346656037ull) {
  std::uint64_t h = basis;
  for (const char c : key) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace activepose
