#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <string>

#include "stochcell/region.hpp"
#include "stochcell/state.hpp"

namespace stochcell {

// Left-stochastic matrix with explicit input/output regions. Rows are indexed
// by output words, columns by input words, both in lexicographic order.
class StochMap {
 public:
  StochMap(Region in, Region out, Eigen::MatrixXd m)
      : in_(std::move(in)), out_(std::move(out)), m_(std::move(m)) {
    if (m_.rows() != out_.word_count() || m_.cols() != in_.word_count())
      throw std::invalid_argument("StochMap: matrix shape does not match regions");
    for (Eigen::Index c = 0; c < m_.cols(); ++c) {
      double sum = 0.0;
      for (Eigen::Index r = 0; r < m_.rows(); ++r) {
        double v = m_(r, c);
        if (!(v >= -kStochasticTol && v <= 1.0 + kStochasticTol))
          throw std::invalid_argument("StochMap: entry outside [0,1] in column " +
                                      std::to_string(c));
        sum += v;
      }
      if (std::abs(sum - 1.0) > kStochasticTol)
        throw std::invalid_argument("StochMap: column " + std::to_string(c) + " sums to " +
                                    std::to_string(sum));
    }
  }

  const Region& in_region() const { return in_; }
  const Region& out_region() const { return out_; }
  const Eigen::MatrixXd& matrix() const { return m_; }
  std::int64_t rows() const { return m_.rows(); }
  std::int64_t cols() const { return m_.cols(); }
  double at(std::int64_t r, std::int64_t c) const { return m_(r, c); }

  friend bool operator==(const StochMap& a, const StochMap& b) {
    return a.in_ == b.in_ && a.out_ == b.out_ && a.m_ == b.m_;
  }

 private:
  Region in_, out_;
  Eigen::MatrixXd m_;
};

inline StochMap identity_map(const Region& r) {
  const std::int64_t n = r.word_count();
  return StochMap(r, r, Eigen::MatrixXd::Identity(n, n));
}

// Map that ignores its input and always outputs the given distribution.
inline StochMap constant_map(const Region& in, const State& out) {
  Eigen::MatrixXd m(out.probs().size(), in.word_count());
  for (Eigen::Index c = 0; c < m.cols(); ++c) m.col(c) = out.probs();
  return StochMap(in, out.region(), std::move(m));
}

// A state viewed as a preparation: a map from the empty region.
inline StochMap as_preparation(const State& s) {
  Eigen::MatrixXd m(s.probs().size(), 1);
  m.col(0) = s.probs();
  return StochMap(Region(), s.region(), std::move(m));
}

// Map that discards all its input cells (single all-ones row).
inline StochMap discard_map(const Region& r) {
  return StochMap(r, Region(), Eigen::MatrixXd::Ones(1, r.word_count()));
}

inline State apply(const StochMap& s, const State& rho) {
  if (rho.region() != s.in_region()) throw std::invalid_argument("apply: region mismatch");
  return State(s.out_region(), s.matrix() * rho.probs());
}

// Matrix product t*s, applying s first.
inline StochMap compose(const StochMap& t, const StochMap& s) {
  if (s.out_region() != t.in_region()) throw std::invalid_argument("compose: region mismatch");
  return StochMap(s.in_region(), t.out_region(), t.matrix() * s.matrix());
}

// Kronecker product with interleaved-label bookkeeping: the result is indexed
// by the sorted union of labels and its entries are s(u'|u)*t(v'|v).
inline StochMap tensor_map(const StochMap& s, const StochMap& t) {
  Region in = s.in_region().united(t.in_region());
  Region out = s.out_region().united(t.out_region());
  auto s_out = index_map(out, s.out_region());
  auto t_out = index_map(out, t.out_region());
  auto s_in = index_map(in, s.in_region());
  auto t_in = index_map(in, t.in_region());
  Eigen::MatrixXd m(out.word_count(), in.word_count());
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const std::int64_t cs = s_in[c], ct = t_in[c];
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      m(r, c) = s.at(s_out[r], cs) * t.at(t_out[r], ct);
  }
  return StochMap(std::move(in), std::move(out), std::move(m));
}

// Marginalizes a subregion of the output: rho -> Tr_traced(s rho).
inline StochMap trace_out_map(const StochMap& s, const Region& traced) {
  if (!s.out_region().subsumes(traced))
    throw std::invalid_argument("trace_out_map: not an output subregion");
  Region keep = s.out_region().without(traced);
  auto keep_map = index_map(s.out_region(), keep);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(keep.word_count(), s.cols());
  for (Eigen::Index r = 0; r < s.rows(); ++r) m.row(keep_map[r]) += s.matrix().row(r);
  return StochMap(s.in_region(), std::move(keep), std::move(m));
}

// Trivial extension s (x) Id over the extra region j.
inline StochMap extend(const StochMap& s, const Region& j) {
  return tensor_map(s, identity_map(j));
}

// Same map with every cell label renamed through `f`. The renaming must be
// strictly monotone on the labels actually present, so index order and hence
// the matrix are unchanged.
inline StochMap relabeled(const StochMap& s, const std::function<int(int)>& f) {
  auto rename = [&](const Region& r) {
    std::vector<int> cells(r.cells());
    for (int& c : cells) c = f(c);
    return Region(std::move(cells), r.dims());
  };
  return StochMap(rename(s.in_region()), rename(s.out_region()), s.matrix());
}

// Reinterprets the regions of a map without touching the matrix. Word counts
// must match; used to fuse runs of adjacent wires into one wide wire (the
// mixed-radix index of a word is unchanged by such a regrouping).
inline StochMap reshape_regions(const StochMap& s, Region in, Region out) {
  if (in.word_count() != s.cols() || out.word_count() != s.rows())
    throw std::invalid_argument("reshape_regions: word counts do not match");
  return StochMap(std::move(in), std::move(out), s.matrix());
}

}  // namespace stochcell
