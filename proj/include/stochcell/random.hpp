#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>

namespace stochcell {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a global seed and a stream index.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

// Uniform double in [0,1) from the engine's raw bits; avoids the
// implementation-defined behaviour of std::uniform_real_distribution so that
// seeded runs reproduce across standard libraries.
inline double canonical_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Inverse-CDF sample from a probability vector.
inline int sample_index(const double* probs, int n, double u) {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  for (int i = n - 1; i >= 0; --i)
    if (probs[i] > 0.0) return i;
  return n - 1;
}

// Fills a vector with a symmetric Dirichlet(1) draw (uniform on the simplex).
inline void fill_dirichlet(Eigen::Ref<Eigen::VectorXd> col, std::mt19937_64& rng) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < col.size(); ++i) {
    double u = canonical_double(rng);
    col[i] = -std::log1p(-u);
    sum += col[i];
  }
  if (sum <= 0.0) {
    col.setConstant(1.0 / static_cast<double>(col.size()));
    return;
  }
  col /= sum;
}

}  // namespace stochcell
