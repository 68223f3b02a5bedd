#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

#include "stochcell/region.hpp"

namespace stochcell {

// Law of distribution of the cells of a region: a probability vector indexed
// by words in lexicographic order.
class State {
 public:
  State(Region region, Eigen::VectorXd probs)
      : region_(std::move(region)), probs_(std::move(probs)) {
    if (probs_.size() != region_.word_count())
      throw std::invalid_argument("State: vector length does not match region");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < probs_.size(); ++i) {
      double p = probs_[i];
      if (!(p >= -kStochasticTol && p <= 1.0 + kStochasticTol))
        throw std::invalid_argument("State: entry " + std::to_string(i) + " outside [0,1]");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kStochasticTol)
      throw std::invalid_argument("State: entries sum to " + std::to_string(sum));
  }

  const Region& region() const { return region_; }
  const Eigen::VectorXd& probs() const { return probs_; }
  double at(std::int64_t idx) const { return probs_[idx]; }
  double at(const Word& w) const { return probs_[word_index(region_, w)]; }

  friend bool operator==(const State& a, const State& b) {
    return a.region_ == b.region_ && a.probs_ == b.probs_;
  }

 private:
  Region region_;
  Eigen::VectorXd probs_;
};

// Point mass at a given word.
inline State point_state(const Region& region, const Word& w) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(region.word_count());
  v[word_index(region, w)] = 1.0;
  return State(region, std::move(v));
}

inline State uniform_state(const Region& region) {
  const std::int64_t n = region.word_count();
  return State(region, Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
}

// Convex combination p*a + (1-p)*b of two states over the same region.
inline State mix(double p, const State& a, const State& b) {
  if (a.region() != b.region()) throw std::invalid_argument("mix: region mismatch");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("mix: weight outside [0,1]");
  return State(a.region(), p * a.probs() + (1.0 - p) * b.probs());
}

// Product distribution over the sorted union of two disjoint regions.
inline State tensor_state(const State& a, const State& b) {
  Region u = a.region().united(b.region());
  auto map_a = index_map(u, a.region());
  auto map_b = index_map(u, b.region());
  Eigen::VectorXd v(u.word_count());
  for (std::int64_t i = 0; i < v.size(); ++i) v[i] = a.at(map_a[i]) * b.at(map_b[i]);
  return State(std::move(u), std::move(v));
}

// Trace-out: sums over all words on the subregion `traced`.
inline State marginal(const State& s, const Region& traced) {
  if (!s.region().subsumes(traced)) throw std::invalid_argument("marginal: not a subregion");
  Region keep = s.region().without(traced);
  auto keep_map = index_map(s.region(), keep);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(keep.word_count());
  for (std::int64_t i = 0; i < s.probs().size(); ++i) v[keep_map[i]] += s.probs()[i];
  return State(std::move(keep), std::move(v));
}

}  // namespace stochcell
