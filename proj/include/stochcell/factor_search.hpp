#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "stochcell/circuit.hpp"
#include "stochcell/random.hpp"
#include "stochcell/stoch_map.hpp"

namespace stochcell {

enum class SearchStatus { converged, exhausted };

struct SearchParams {
  int restarts = 64;
  int max_sweeps = 500;
  double accept_tol = 1e-8;  // on the Frobenius residual
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = hardware concurrency
  int inner_iters = 300;
  double stall_rel_improvement = 1e-13;
  int stall_sweeps = 8;
  bool stop_at_first_success = true;
  bool record_traces = false;
  std::vector<Eigen::MatrixXd> warm_start;  // optional initial boxes for restart 0
};

struct FactorShapeResult {
  SearchStatus status = SearchStatus::exhausted;
  double residual = 0.0;                 // Frobenius norm of the best gap
  std::vector<Eigen::MatrixXd> boxes;    // column-stochastic witness candidates
  int best_restart = -1;
  int sweeps = 0;
  std::vector<double> trace;             // best restart: residual after each sweep
  std::vector<std::vector<double>> all_traces;  // filled when record_traces
};

// Euclidean projection onto the probability simplex (sort-based).
inline void project_to_simplex(Eigen::Ref<Eigen::VectorXd> v) {
  const int n = static_cast<int>(v.size());
  if (n == 1) {
    v[0] = 1.0;
    return;
  }
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cum = 0.0, tau = 0.0;
  int rho = 0;
  for (int j = 0; j < n; ++j) {
    cum += u[j];
    double t = (cum - 1.0) / (j + 1);
    if (u[j] - t > 0.0) {
      rho = j + 1;
      tau = t;
    }
  }
  (void)rho;
  for (int i = 0; i < n; ++i) v[i] = std::max(v[i] - tau, 0.0);
}

namespace detail {

// Quadratic model F(x) = ||A x - g||^2 restricted to per-column simplices,
// minimized by projected gradient with a monotone backtracking step.
inline double projected_gradient_columns(const Eigen::MatrixXd& h, const Eigen::VectorXd& c,
                                         double g2, Eigen::VectorXd& x, std::int64_t block,
                                         int max_iters) {
  auto objective = [&](const Eigen::VectorXd& y) {
    return y.dot(h * y) - 2.0 * c.dot(y) + g2;
  };
  // Lipschitz constant of the gradient: 2 * lambda_max(h), via power iteration.
  Eigen::VectorXd p = Eigen::VectorXd::Ones(h.rows()).normalized();
  double lam = 0.0;
  for (int it = 0; it < 50; ++it) {
    Eigen::VectorXd q = h * p;
    lam = q.norm();
    if (lam <= 0.0) break;
    p = q / lam;
  }
  if (lam <= 0.0) return objective(x);  // box has no effect on the output
  double step = 1.0 / (2.0 * lam);

  double f = objective(x);
  for (int it = 0; it < max_iters; ++it) {
    Eigen::VectorXd grad = 2.0 * (h * x - c);
    double s = step;
    Eigen::VectorXd trial;
    double f_trial = f;
    for (int bt = 0; bt < 40; ++bt) {
      trial = x - s * grad;
      for (std::int64_t off = 0; off < trial.size(); off += block)
        project_to_simplex(trial.segment(off, block));
      f_trial = objective(trial);
      if (f_trial <= f) break;
      s *= 0.5;
    }
    if (f_trial > f) break;  // no descent direction left at float precision
    double improvement = f - f_trial;
    x = trial;
    f = f_trial;
    if (improvement <= 1e-16 * (1.0 + std::abs(f))) break;
  }
  return f;
}

struct ShapeWork {
  const CircuitShape* shape;
  std::vector<LayerPlan> plans;
  std::vector<int> box_layer;  // layer index of each box
  Eigen::MatrixXd target;

  explicit ShapeWork(const CircuitShape& s, const Eigen::MatrixXd& g) : shape(&s), target(g) {
    plans = plan_layers(s);
    box_layer.assign(s.boxes.size(), -1);
    for (std::size_t k = 0; k < s.layers.size(); ++k)
      for (int b : s.layers[k]) box_layer[b] = static_cast<int>(k);
  }

  // Least-squares environment of one box: target ~ env * vec(X_b) where
  // vec stacks the box matrix column by column.
  Eigen::MatrixXd box_environment(int b, const std::vector<Eigen::MatrixXd>& boxes) const {
    const int layer = box_layer[b];
    const LayerPlan& plan = plans[layer];
    const std::int64_t n_in = target.cols(), n_out = target.rows();

    Eigen::MatrixXd pre = Eigen::MatrixXd::Identity(n_in, n_in);
    for (int k = 0; k < layer; ++k) pre = layer_matrix(plans[k], boxes) * pre;
    Eigen::MatrixXd post = Eigen::MatrixXd::Identity(n_out, n_out);
    for (int k = layer + 1; k < static_cast<int>(plans.size()); ++k)
      post = post * layer_matrix(plans[k], boxes).transpose();
    // post now maps layer outputs: post(o, row) with row over plan.out words.
    post.transposeInPlace();

    const std::int64_t np = boxes[b].rows(), nq = boxes[b].cols();
    Eigen::MatrixXd env = Eigen::MatrixXd::Zero(n_out * n_in, np * nq);

    // Walk the layer's entries with the solved box's factor stripped out.
    int self_slot = -1;
    for (std::size_t s = 0; s < plan.slots.size(); ++s)
      if (plan.slots[s].box == b) self_slot = static_cast<int>(s);

    std::vector<int> in_word, out_word;
    std::vector<std::vector<std::int64_t>> slot_cols(plan.slots.size());
    std::vector<std::vector<int>> pass_in(plan.in_count);
    for (std::int64_t c = 0; c < plan.in_count; ++c) {
      decode_mixed(c, plan.in_dims, in_word);
      for (std::size_t s = 0; s < plan.slots.size(); ++s)
        slot_cols[s].push_back(
            encode_positions(in_word, plan.slots[s].in_pos, plan.slots[s].in_dims));
      for (auto& [op, ip] : plan.passthrough) {
        (void)op;
        pass_in[c].push_back(in_word[ip]);
      }
    }
    for (std::int64_t row = 0; row < plan.out_count; ++row) {
      decode_mixed(row, plan.out_dims, out_word);
      std::vector<std::int64_t> slot_rows(plan.slots.size());
      for (std::size_t s = 0; s < plan.slots.size(); ++s)
        slot_rows[s] =
            encode_positions(out_word, plan.slots[s].out_pos, plan.slots[s].out_dims);
      std::vector<int> pass_out;
      for (auto& [op, ip] : plan.passthrough) {
        (void)ip;
        pass_out.push_back(out_word[op]);
      }
      for (std::int64_t col = 0; col < plan.in_count; ++col) {
        if (pass_out != pass_in[col]) continue;
        double f = 1.0;
        for (std::size_t s = 0; s < plan.slots.size() && f != 0.0; ++s) {
          if (static_cast<int>(s) == self_slot) continue;
          f *= boxes[plan.slots[s].box](slot_rows[s], slot_cols[s][col]);
        }
        if (f == 0.0) continue;
        const std::int64_t p = slot_rows[self_slot], q = slot_cols[self_slot][col];
        for (std::int64_t i = 0; i < n_in; ++i) {
          double fp = f * pre(col, i);
          if (fp == 0.0) continue;
          env.col(q * np + p).segment(i * n_out, n_out) += fp * post.col(row);
        }
      }
    }
    return env;
  }

  double objective(const std::vector<Eigen::MatrixXd>& boxes) const {
    Eigen::MatrixXd m = layer_matrix(plans.front(), boxes);
    for (std::size_t k = 1; k < plans.size(); ++k) m = layer_matrix(plans[k], boxes) * m;
    return (m - target).squaredNorm();
  }
};

struct RestartOutcome {
  double residual = std::numeric_limits<double>::infinity();
  int sweeps = 0;
  std::vector<Eigen::MatrixXd> boxes;
  std::vector<double> trace;
};

inline RestartOutcome run_restart(const ShapeWork& work, const SearchParams& params,
                                  int restart) {
  const CircuitShape& shape = *work.shape;
  std::mt19937_64 rng(mix_seed(params.seed, static_cast<std::uint64_t>(restart)));

  std::vector<Eigen::MatrixXd> boxes(shape.boxes.size());
  const bool warm = restart == 0 && !params.warm_start.empty();
  if (warm && params.warm_start.size() != shape.boxes.size())
    throw std::invalid_argument("factor_shape: warm start box count mismatch");
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    const std::int64_t rows = shape.box_rows(static_cast<int>(b));
    const std::int64_t cols = shape.box_cols(static_cast<int>(b));
    if (warm) {
      if (params.warm_start[b].rows() != rows || params.warm_start[b].cols() != cols)
        throw std::invalid_argument("factor_shape: warm start box shape mismatch");
      boxes[b] = params.warm_start[b];
    } else {
      boxes[b].resize(rows, cols);
      for (std::int64_t c = 0; c < cols; ++c) fill_dirichlet(boxes[b].col(c), rng);
    }
  }

  const Eigen::VectorXd g = Eigen::Map<const Eigen::VectorXd>(
      work.target.data(), work.target.size());
  const double g2 = g.squaredNorm();

  RestartOutcome out;
  double obj = work.objective(boxes);
  out.trace.push_back(std::sqrt(obj));
  int stalled = 0;
  for (int sweep = 1; sweep <= params.max_sweeps; ++sweep) {
    for (std::size_t b = 0; b < boxes.size(); ++b) {
      Eigen::MatrixXd env = work.box_environment(static_cast<int>(b), boxes);
      Eigen::MatrixXd h = env.transpose() * env;
      Eigen::VectorXd c = env.transpose() * g;
      Eigen::VectorXd x = Eigen::Map<Eigen::VectorXd>(boxes[b].data(), boxes[b].size());
      obj = projected_gradient_columns(h, c, g2, x, boxes[b].rows(), params.inner_iters);
      boxes[b] = Eigen::Map<Eigen::MatrixXd>(x.data(), boxes[b].rows(), boxes[b].cols());
    }
    double resid = std::sqrt(std::max(obj, 0.0));
    double prev = out.trace.back();
    out.trace.push_back(resid);
    out.sweeps = sweep;
    if (resid <= params.accept_tol) break;
    if (prev - resid <= params.stall_rel_improvement * std::max(1.0, prev)) {
      if (++stalled >= params.stall_sweeps) break;
    } else {
      stalled = 0;
    }
  }

  // Exact column renormalization; projections keep columns on the simplex up
  // to rounding, so this is a no-op at the 1e-15 level.
  for (auto& m : boxes)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      double sum = m.col(c).sum();
      if (sum > 0.0) m.col(c) /= sum;
    }
  out.residual = std::sqrt(std::max(work.objective(boxes), 0.0));
  out.boxes = std::move(boxes);
  return out;
}

}  // namespace detail

// Multi-restart alternating minimization of the squared Frobenius gap between
// the target map and the shape evaluated on column-stochastic boxes. Each
// sweep solves one box as a simplex-constrained least-squares problem by
// projected gradient, holding the others fixed. Restarts draw every column
// from a symmetric Dirichlet(1) and run on independent seeded streams; they
// execute in blocks of eight so that early stopping does not depend on thread
// scheduling. Results merge by minimum residual, lowest restart index first.
//
// The search never certifies nonexistence: a miss is reported as exhausted
// together with the best residual found.
inline FactorShapeResult factor_shape(const StochMap& target, const CircuitShape& shape,
                                      const SearchParams& params = {}) {
  if (!signature_matches(shape, target))
    throw std::invalid_argument("factor_shape: shape signature does not match the map");
  detail::ShapeWork work(shape, target.matrix());

  const int restarts = std::max(params.restarts, 1);
  std::vector<detail::RestartOutcome> outcomes(restarts);
  std::vector<char> done(restarts, 0);

  const int block = 8;
  int hw = params.threads > 0 ? params.threads
                              : static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;

  int completed = 0;
  for (int base = 0; base < restarts; base += block) {
    const int end = std::min(base + block, restarts);
    std::atomic<int> next(base);
    auto worker = [&]() {
      for (int r = next.fetch_add(1); r < end; r = next.fetch_add(1)) {
        outcomes[r] = detail::run_restart(work, params, r);
        done[r] = 1;
      }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < std::min(hw, end - base); ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    completed = end;
    if (params.stop_at_first_success) {
      bool hit = false;
      for (int r = 0; r < completed; ++r)
        if (done[r] && outcomes[r].residual <= params.accept_tol) hit = true;
      if (hit) break;
    }
  }

  FactorShapeResult result;
  for (int r = 0; r < completed; ++r) {
    if (!done[r]) continue;
    if (result.best_restart < 0 || outcomes[r].residual < result.residual) {
      result.best_restart = r;
      result.residual = outcomes[r].residual;
    }
  }
  auto& best = outcomes[result.best_restart];
  result.boxes = best.boxes;
  result.trace = best.trace;
  result.sweeps = best.sweeps;
  result.status =
      result.residual <= params.accept_tol ? SearchStatus::converged : SearchStatus::exhausted;
  if (params.record_traces) {
    result.all_traces.reserve(completed);
    for (int r = 0; r < completed; ++r)
      if (done[r]) result.all_traces.push_back(outcomes[r].trace);
  }
  return result;
}

}  // namespace stochcell
