#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <optional>

#include "stochcell/stoch_map.hpp"

namespace stochcell {

// A bipartition of a map's input and output wires into a left and a right
// part. Both partitions must be exact (disjoint, union equal to the region).
struct Cut {
  Region in_left, in_right;
  Region out_left, out_right;
};

inline void validate_cut(const StochMap& s, const Cut& cut) {
  if (!cut.in_left.disjoint_from(cut.in_right) || !cut.out_left.disjoint_from(cut.out_right))
    throw std::invalid_argument("Cut: sides overlap");
  if (cut.in_left.united(cut.in_right) != s.in_region() ||
      cut.out_left.united(cut.out_right) != s.out_region())
    throw std::invalid_argument("Cut: does not partition the map's regions");
}

// Cut of a map's wires at a label boundary: input/output cells with label < x
// on the left, the rest on the right.
inline Cut cut_below_label(const StochMap& s, int x) {
  auto split = [&](const Region& r) {
    std::vector<int> left, right;
    for (int c : r.cells()) (c < x ? left : right).push_back(c);
    return std::make_pair(r.restricted_to(left), r.restricted_to(right));
  };
  auto [il, ir] = split(s.in_region());
  auto [ol, orr] = split(s.out_region());
  return Cut{il, ir, ol, orr};
}

struct ProductFactors {
  StochMap left;
  StochMap right;
  double residual = 0.0;  // max-norm reconstruction error of left (x) right vs s
};

// Decides whether s factorizes as left (x) right across the cut, and extracts
// the stochastic factors when it does.
//
// The map is realigned into a bipartite matrix M with row index
// (left-out, left-in) and column index (right-out, right-in); s is a product
// exactly when M is rank one with nonnegative factors. The factor pair is
// read off the dominant singular dyad (global scale pushed into the left
// factor), each factor's columns are renormalized to sum to one, and the
// reconstruction is verified in max norm.
inline std::optional<ProductFactors> factor_product(const StochMap& s, const Cut& cut,
                                                    double tol = kStochasticTol) {
  validate_cut(s, cut);
  const std::int64_t n_lo = cut.out_left.word_count(), n_li = cut.in_left.word_count();
  const std::int64_t n_ro = cut.out_right.word_count(), n_ri = cut.in_right.word_count();

  auto lo = index_map(s.out_region(), cut.out_left);
  auto ro = index_map(s.out_region(), cut.out_right);
  auto li = index_map(s.in_region(), cut.in_left);
  auto ri = index_map(s.in_region(), cut.in_right);

  Eigen::MatrixXd m(n_lo * n_li, n_ro * n_ri);
  for (Eigen::Index c = 0; c < s.cols(); ++c)
    for (Eigen::Index r = 0; r < s.rows(); ++r)
      m(lo[r] * n_li + li[c], ro[r] * n_ri + ri[c]) = s.at(r, c);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::VectorXd u = svd.matrixU().col(0);
  Eigen::VectorXd v = svd.matrixV().col(0);
  const double sigma = svd.singularValues()[0];

  // Fix the dyad's sign so the dominant component is positive.
  Eigen::Index iu;
  u.cwiseAbs().maxCoeff(&iu);
  if (u[iu] < 0.0) {
    u = -u;
    v = -v;
  }

  Eigen::MatrixXd a = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                               Eigen::RowMajor>>(u.data(), n_lo, n_li) *
                      sigma;
  Eigen::MatrixXd b = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                               Eigen::RowMajor>>(v.data(), n_ro, n_ri);

  auto normalize = [&](Eigen::MatrixXd& f) {
    for (Eigen::Index c = 0; c < f.cols(); ++c) {
      double sum = f.col(c).sum();
      if (sum <= kExactTol) return false;
      f.col(c) /= sum;
    }
    return true;
  };
  if (!normalize(a) || !normalize(b)) return std::nullopt;
  if (a.minCoeff() < -tol || b.minCoeff() < -tol) return std::nullopt;
  a = a.cwiseMax(0.0).cwiseMin(1.0);
  b = b.cwiseMax(0.0).cwiseMin(1.0);
  for (Eigen::Index c = 0; c < a.cols(); ++c) a.col(c) /= a.col(c).sum();
  for (Eigen::Index c = 0; c < b.cols(); ++c) b.col(c) /= b.col(c).sum();

  double residual = 0.0;
  for (Eigen::Index c = 0; c < s.cols(); ++c)
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
      double rec = a(lo[r], li[c]) * b(ro[r], ri[c]);
      residual = std::max(residual, std::abs(rec - s.at(r, c)));
    }
  if (residual > tol) return std::nullopt;

  return ProductFactors{StochMap(cut.in_left, cut.out_left, std::move(a)),
                        StochMap(cut.in_right, cut.out_right, std::move(b)), residual};
}

}  // namespace stochcell
