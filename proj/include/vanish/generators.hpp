#pragma once

// Seeded 2-d toy sets: three blobs of unequal spread, one noisy circle and a
// pair of concentric circles. Noise is isotropic Gaussian with the given
// standard deviation; circle angles are uniform on [0, 2pi).

#include <array>
#include <cstdint>
#include <numbers>
#include <random>

#include "vanish/polycore.hpp"

namespace vanish {

struct BlobSpec {
  double cx;
  double cy;
  int count;
  double noise;
};

/// 60 points: one blob with noise 0.3, two with noise 0.05.
inline constexpr std::array<BlobSpec, 3> kDefaultBlobs{{{0.0, 1.0, 20, 0.3}, {-1.0, -0.5, 20, 0.05}, {1.0, -0.5, 20, 0.05}}};

template <std::size_t K>
inline PointSet gen_blobs(std::uint64_t seed, const std::array<BlobSpec, K>& blobs) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Index n = 0;
  for (const auto& b : blobs) n += b.count;
  Matrix m(n, 2);
  Index row = 0;
  for (const auto& b : blobs) {
    for (int i = 0; i < b.count; ++i, ++row) {
      m(row, 0) = b.cx + b.noise * gauss(rng);
      m(row, 1) = b.cy + b.noise * gauss(rng);
    }
  }
  return PointSet(std::move(m));
}

inline PointSet gen_blobs(std::uint64_t seed) { return gen_blobs(seed, kDefaultBlobs); }

namespace detail {

inline void ring(Matrix& m, Index first, int count, double radius, double noise, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < count; ++i) {
    const double a = angle(rng);
    const double ex = noise > 0.0 ? noise * gauss(rng) : 0.0;
    const double ey = noise > 0.0 ? noise * gauss(rng) : 0.0;
    m(first + i, 0) = radius * std::cos(a) + ex;
    m(first + i, 1) = radius * std::sin(a) + ey;
  }
}

}  // namespace detail

inline PointSet gen_circle(std::uint64_t seed, int n = 30, double noise = 0.05, double radius = 1.0) {
  if (n < 1) throw InputError("gen_circle: n must be >= 1");
  std::mt19937_64 rng(seed);
  Matrix m(n, 2);
  detail::ring(m, 0, n, radius, noise, rng);
  return PointSet(std::move(m));
}

/// Outer ring first (ceil(n/2) points), then the inner ring.
inline PointSet gen_concentric(std::uint64_t seed, int n = 50, double noise = 0.02, double inner = 0.5, double outer = 1.0) {
  if (n < 2) throw InputError("gen_concentric: n must be >= 2");
  std::mt19937_64 rng(seed);
  Matrix m(n, 2);
  const int n_outer = (n + 1) / 2;
  detail::ring(m, 0, n_outer, outer, noise, rng);
  detail::ring(m, n_outer, n - n_outer, inner, noise, rng);
  return PointSet(std::move(m));
}

}  // namespace vanish
