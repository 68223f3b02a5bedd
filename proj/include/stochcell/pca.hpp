#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "stochcell/random.hpp"
#include "stochcell/state.hpp"
#include "stochcell/stoch_map.hpp"

namespace stochcell::pca {

// One cell layer of splitters C (cell -> left wire, right wire) and one layer
// of combiners D (previous right wire, own left wire -> cell). C has s
// columns and dl*dr rows (left wire major); D has dr*dl columns (right wire
// major) and s rows.
struct PCA {
  Alphabet alphabet;
  int dl = 0, dr = 0;
  StochMap C;
  StochMap D;

  PCA(Alphabet a, int dl_, int dr_, Eigen::MatrixXd c, Eigen::MatrixXd d)
      : alphabet(a),
        dl(dl_),
        dr(dr_),
        C(Region::uniform({0}, a.size), Region({0, 1}, {dl_, dr_}), std::move(c)),
        D(Region({0, 1}, {dr_, dl_}), Region::uniform({0}, a.size), std::move(d)) {
    if (dl < 1 || dr < 1) throw std::invalid_argument("PCA: wire dimensions must be >= 1");
  }
};

// Finite truncation of the line: either a ring (the last right wire wraps
// around) or a segment whose dangling boundary wires are pinned to a declared
// symbol on the left and marginalized on the right.
struct Boundary {
  enum class Kind { periodic, fixed };
  Kind kind = Kind::periodic;
  int symbol = 0;  // value injected on the left boundary wire (fixed only)

  static Boundary ring() { return {}; }
  static Boundary fixed(int symbol = 0) { return {Kind::fixed, symbol}; }
};

namespace detail {

inline void check_budget(const PCA& p, int w) {
  if (w < 1) throw std::invalid_argument("pca: width must be >= 1");
  double cell_space = std::pow(static_cast<double>(p.alphabet.size), w);
  double wire_space = std::pow(static_cast<double>(p.dl) * p.dr, w);
  if (cell_space > 4096.0 + 0.5) throw std::invalid_argument("pca: cell space exceeds budget");
  if (wire_space > static_cast<double>(std::int64_t{1} << 26))
    throw std::invalid_argument("pca: wire space exceeds budget");
}

inline std::int64_t product_of(const std::vector<int>& dims) {
  std::int64_t n = 1;
  for (int d : dims) n *= d;
  return n;
}

// Applies m (dout x din) to one axis of a flattened tensor.
inline void apply_axis(std::vector<double>& v, std::vector<int>& dims, int pos,
                       const Eigen::MatrixXd& m) {
  const std::int64_t din = dims[pos], dout = m.rows();
  std::int64_t left = 1, right = 1;
  for (int p = 0; p < pos; ++p) left *= dims[p];
  for (std::size_t p = pos + 1; p < dims.size(); ++p) right *= dims[p];
  std::vector<double> out(static_cast<std::size_t>(left * dout * right), 0.0);
  for (std::int64_t l = 0; l < left; ++l)
    for (std::int64_t i = 0; i < din; ++i) {
      const double* src = v.data() + (l * din + i) * right;
      for (std::int64_t o = 0; o < dout; ++o) {
        const double c = m(o, i);
        if (c == 0.0) continue;
        double* dst = out.data() + (l * dout + o) * right;
        for (std::int64_t r = 0; r < right; ++r) dst[r] += c * src[r];
      }
    }
  v = std::move(out);
  dims[pos] = static_cast<int>(dout);
}

// Contracts the adjacent axis pair (pos, pos+1) through m, whose column index
// runs over the merged pair with axis pos as the major digit.
inline void contract_pair(std::vector<double>& v, std::vector<int>& dims, int pos,
                          const Eigen::MatrixXd& m) {
  std::vector<int> merged(dims);
  merged[pos] = dims[pos] * dims[pos + 1];
  merged.erase(merged.begin() + pos + 1);
  apply_axis(v, merged, pos, m);
  dims = std::move(merged);
}

inline void trace_last_axis(std::vector<double>& v, std::vector<int>& dims) {
  const std::int64_t d = dims.back();
  const std::int64_t n = static_cast<std::int64_t>(v.size()) / d;
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  for (std::int64_t k = 0; k < n; ++k)
    for (std::int64_t j = 0; j < d; ++j) out[k] += v[k * d + j];
  v = std::move(out);
  dims.pop_back();
}

inline void prepend_point_axis(std::vector<double>& v, std::vector<int>& dims, int d, int sym) {
  std::vector<double> out(v.size() * d, 0.0);
  std::copy(v.begin(), v.end(), out.begin() + static_cast<std::int64_t>(sym) * v.size());
  v = std::move(out);
  dims.insert(dims.begin(), d);
}

inline void rotate_last_axis_to_front(std::vector<double>& v, std::vector<int>& dims) {
  const std::int64_t d = dims.back();
  const std::int64_t rest = static_cast<std::int64_t>(v.size()) / d;
  std::vector<double> out(v.size());
  for (std::int64_t k = 0; k < rest; ++k)
    for (std::int64_t j = 0; j < d; ++j) out[j * rest + k] = v[k * d + j];
  v = std::move(out);
  dims.pop_back();
  dims.insert(dims.begin(), static_cast<int>(d));
}

// One layered step on a flat distribution over w cells: splitters cell by
// cell, boundary routing, then combiners pair by pair. Never materializes the
// width-w global matrix.
inline std::vector<double> step_vec(const PCA& p, std::vector<double> v, int w, Boundary b) {
  std::vector<int> dims(w, p.alphabet.size);
  for (int c = 0; c < w; ++c) {
    apply_axis(v, dims, 2 * c, p.C.matrix());
    dims[2 * c] = p.dl;
    dims.insert(dims.begin() + 2 * c + 1, p.dr);
  }
  if (b.kind == Boundary::Kind::periodic) {
    rotate_last_axis_to_front(v, dims);
  } else {
    if (b.symbol < 0 || b.symbol >= p.dr)
      throw std::invalid_argument("pca: boundary symbol out of range");
    trace_last_axis(v, dims);
    prepend_point_axis(v, dims, p.dr, b.symbol);
  }
  for (int c = 0; c < w; ++c) contract_pair(v, dims, c, p.D.matrix());
  return v;
}

}  // namespace detail

// Exact one-step image of a state without building the global matrix.
inline State step_exact(const PCA& p, const State& rho, Boundary b = Boundary::ring()) {
  const int w = rho.region().cell_count();
  detail::check_budget(p, w);
  for (int d : rho.region().dims())
    if (d != p.alphabet.size)
      throw std::invalid_argument("step_exact: state cells must carry the PCA alphabet");
  std::vector<double> v(rho.probs().data(), rho.probs().data() + rho.probs().size());
  v = detail::step_vec(p, std::move(v), w, b);
  return State(rho.region(), Eigen::Map<Eigen::VectorXd>(v.data(), v.size()));
}

// Exact global map over cells 1..w, assembled column by column through the
// layered step.
inline StochMap global_map(const PCA& p, int w, Boundary b = Boundary::ring()) {
  detail::check_budget(p, w);
  const Region cells = Region::interval(1, w, p.alphabet.size);
  const std::int64_t n = cells.word_count();
  Eigen::MatrixXd g(n, n);
  for (std::int64_t c = 0; c < n; ++c) {
    std::vector<double> v(static_cast<std::size_t>(n), 0.0);
    v[c] = 1.0;
    v = detail::step_vec(p, std::move(v), w, b);
    g.col(c) = Eigen::Map<Eigen::VectorXd>(v.data(), n);
  }
  return StochMap(cells, cells, std::move(g));
}

// One ancestral sample of the global map: draws every splitter output, routes
// the wires, then draws every combiner output.
inline Word sample_step(const PCA& p, const Word& config, Boundary b, std::mt19937_64& rng) {
  const int w = static_cast<int>(config.size());
  const int s = p.alphabet.size;
  for (int x : config)
    if (x < 0 || x >= s) throw std::invalid_argument("sample_step: symbol out of range");
  std::vector<int> lw(w), rw(w);
  for (int i = 0; i < w; ++i) {
    int lr = sample_index(p.C.matrix().col(config[i]).data(), p.dl * p.dr,
                          canonical_double(rng));
    lw[i] = lr / p.dr;
    rw[i] = lr % p.dr;
  }
  Word out(w);
  for (int i = 0; i < w; ++i) {
    int r_prev;
    if (i > 0)
      r_prev = rw[i - 1];
    else if (b.kind == Boundary::Kind::periodic)
      r_prev = rw[w - 1];
    else
      r_prev = b.symbol;
    out[i] = sample_index(p.D.matrix().col(r_prev * p.dl + lw[i]).data(), s,
                          canonical_double(rng));
  }
  return out;
}

// Per-step per-cell marginals of a trajectory; exact evolution when trials is
// zero, Monte Carlo with standard errors otherwise.
struct TrajectoryStats {
  int width = 0;
  int steps = 0;
  std::int64_t trials = 0;  // 0 = exact
  std::uint64_t seed = 0;
  int alphabet_size = 0;
  // marginals[t][cell][symbol]; t = 0 is the initial state.
  std::vector<std::vector<std::vector<double>>> marginals;
  std::vector<std::vector<std::vector<double>>> stderrs;  // Monte Carlo only
  std::optional<State> final_state;                       // exact only
};

inline TrajectoryStats run_exact(const PCA& p, const State& init, int steps,
                                 Boundary b = Boundary::ring()) {
  if (steps < 0) throw std::invalid_argument("run_exact: negative step count");
  const int w = init.region().cell_count();
  detail::check_budget(p, w);
  TrajectoryStats stats;
  stats.width = w;
  stats.steps = steps;
  stats.alphabet_size = p.alphabet.size;
  State rho = init;
  for (int t = 0; t <= steps; ++t) {
    if (t > 0) rho = step_exact(p, rho, b);
    std::vector<std::vector<double>> per_cell;
    for (int c : rho.region().cells()) {
      State m = marginal(rho, rho.region().without(rho.region().restricted_to({c})));
      per_cell.emplace_back(m.probs().data(), m.probs().data() + m.probs().size());
    }
    stats.marginals.push_back(std::move(per_cell));
  }
  stats.final_state = rho;
  return stats;
}

inline TrajectoryStats run_mc(const PCA& p, const Word& init, int steps, std::int64_t trials,
                              std::uint64_t seed, Boundary b = Boundary::ring(),
                              int threads = 0) {
  if (steps < 0 || trials < 1) throw std::invalid_argument("run_mc: bad steps or trials");
  const int w = static_cast<int>(init.size());
  const int s = p.alphabet.size;

  using Counts = std::vector<std::int64_t>;  // [(t * w + cell) * s + symbol]
  auto run_range = [&](std::int64_t lo, std::int64_t hi, Counts& counts) {
    for (std::int64_t trial = lo; trial < hi; ++trial) {
      std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(trial)));
      Word config = init;
      for (int t = 0; t <= steps; ++t) {
        if (t > 0) config = sample_step(p, config, b, rng);
        for (int c = 0; c < w; ++c) ++counts[(static_cast<std::int64_t>(t) * w + c) * s + config[c]];
      }
    }
  };

  int hw = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  hw = static_cast<int>(std::min<std::int64_t>(hw, trials));
  std::vector<Counts> partial(hw, Counts(static_cast<std::size_t>(steps + 1) * w * s, 0));
  std::vector<std::thread> pool;
  const std::int64_t chunk = (trials + hw - 1) / hw;
  for (int t = 1; t < hw; ++t)
    pool.emplace_back(run_range, t * chunk, std::min<std::int64_t>((t + 1) * chunk, trials),
                      std::ref(partial[t]));
  run_range(0, std::min<std::int64_t>(chunk, trials), partial[0]);
  for (auto& th : pool) th.join();
  Counts counts(partial[0].size(), 0);
  for (const auto& pc : partial)
    for (std::size_t k = 0; k < counts.size(); ++k) counts[k] += pc[k];

  TrajectoryStats stats;
  stats.width = w;
  stats.steps = steps;
  stats.trials = trials;
  stats.seed = seed;
  stats.alphabet_size = s;
  for (int t = 0; t <= steps; ++t) {
    std::vector<std::vector<double>> marg(w), se(w);
    for (int c = 0; c < w; ++c) {
      marg[c].resize(s);
      se[c].resize(s);
      for (int y = 0; y < s; ++y) {
        double ph = static_cast<double>(counts[(static_cast<std::int64_t>(t) * w + c) * s + y]) /
                    static_cast<double>(trials);
        marg[c][y] = ph;
        se[c][y] = std::sqrt(ph * (1.0 - ph) / static_cast<double>(trials));
      }
    }
    stats.marginals.push_back(std::move(marg));
    stats.stderrs.push_back(std::move(se));
  }
  return stats;
}

// A deterministic radius-1/2 rule together with a per-cell noise matrix,
// applied in one of the two phase orders.
struct StandardPCA {
  enum class Order { ca_then_noise, noise_then_ca };

  Alphabet alphabet;
  std::vector<int> rule;  // s*s table: next = rule[left * s + own]
  Eigen::MatrixXd noise;  // s x s, column-stochastic
  Order order = Order::noise_then_ca;

  StandardPCA(Alphabet a, std::vector<int> rule_table, Eigen::MatrixXd noise_matrix,
              Order ord)
      : alphabet(a), rule(std::move(rule_table)), noise(std::move(noise_matrix)), order(ord) {
    const int s = alphabet.size;
    if (static_cast<int>(rule.size()) != s * s)
      throw std::invalid_argument("StandardPCA: rule table must have s*s entries");
    for (int v : rule)
      if (v < 0 || v >= s) throw std::invalid_argument("StandardPCA: rule value out of range");
    StochMap check(Region::uniform({0}, s), Region::uniform({0}, s), noise);
    (void)check;
  }

  // Rule that looks only at the cell itself.
  static StandardPCA cellwise(Alphabet a, const std::vector<int>& table,
                              Eigen::MatrixXd noise_matrix, Order ord) {
    const int s = a.size;
    if (static_cast<int>(table.size()) != s)
      throw std::invalid_argument("StandardPCA: cellwise table must have s entries");
    std::vector<int> full(s * s);
    for (int left = 0; left < s; ++left)
      for (int own = 0; own < s; ++own) full[left * s + own] = table[own];
    return StandardPCA(a, std::move(full), std::move(noise_matrix), ord);
  }
};

// Splits a two-phase rule+noise automaton into the splitter/combiner form.
// noise-then-ca: the splitter applies the noise and copies the result to both
// wires, the combiner applies the rule. ca-then-noise: the splitter is a pure
// copy and the combiner applies the noise after the rule.
inline PCA from_standard(const StandardPCA& sp) {
  const int s = sp.alphabet.size;
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(s * s, s);
  if (sp.order == StandardPCA::Order::noise_then_ca) {
    for (int x = 0; x < s; ++x)
      for (int y = 0; y < s; ++y) c(y * s + y, x) = sp.noise(y, x);
  } else {
    for (int x = 0; x < s; ++x) c(x * s + x, x) = 1.0;
  }
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(s, s * s);
  for (int r = 0; r < s; ++r)
    for (int l = 0; l < s; ++l) {
      const int image = sp.rule[r * s + l];
      if (sp.order == StandardPCA::Order::noise_then_ca)
        d(image, r * s + l) = 1.0;
      else
        d.col(r * s + l) = sp.noise.col(image);
    }
  return PCA(sp.alphabet, s, s, std::move(c), std::move(d));
}

// Supercell composition: regroups two stacked layers into one automaton over
// width-2 supercells (alphabet s^2, wire dimensions multiplied).
//
// The regrouping used here: the new splitter runs both of the first
// automaton's splitters inside the supercell, the first automaton's combiner
// that is interior to the supercell, and the second automaton's splitter on
// that interior result. It exports (l1 of the left cell, l2 of the right
// cell) leftwards and (r1 of the right cell, r2 of the right cell)
// rightwards. The new combiner holds the straddling boxes: the first
// automaton's combiner at the supercell's left cell, the second automaton's
// splitter on that cell, and both of the second automaton's combiners.
inline PCA compose_pca(const PCA& second, const PCA& first) {
  if (!(first.alphabet == second.alphabet))
    throw std::invalid_argument("compose_pca: alphabet mismatch");
  const int s = first.alphabet.size;
  const int dl1 = first.dl, dr1 = first.dr, dl2 = second.dl, dr2 = second.dr;
  const auto& c1 = first.C.matrix();
  const auto& d1 = first.D.matrix();
  const auto& c2 = second.C.matrix();
  const auto& d2 = second.D.matrix();

  const int ndl = dl1 * dl2, ndr = dr1 * dr2;
  Eigen::MatrixXd cn = Eigen::MatrixXd::Zero(ndl * ndr, s * s);
  for (int xa = 0; xa < s; ++xa)
    for (int xb = 0; xb < s; ++xb) {
      const int col = xa * s + xb;
      for (int l1a = 0; l1a < dl1; ++l1a)
        for (int r1a = 0; r1a < dr1; ++r1a) {
          const double wa = c1(l1a * dr1 + r1a, xa);
          if (wa == 0.0) continue;
          for (int l1b = 0; l1b < dl1; ++l1b)
            for (int r1b = 0; r1b < dr1; ++r1b) {
              const double wb = wa * c1(l1b * dr1 + r1b, xb);
              if (wb == 0.0) continue;
              for (int ob = 0; ob < s; ++ob) {
                const double wo = wb * d1(ob, r1a * dl1 + l1b);
                if (wo == 0.0) continue;
                for (int l2b = 0; l2b < dl2; ++l2b)
                  for (int r2b = 0; r2b < dr2; ++r2b) {
                    const double w = wo * c2(l2b * dr2 + r2b, ob);
                    if (w == 0.0) continue;
                    const int row = ((l1a * dl2 + l2b) * dr1 + r1b) * dr2 + r2b;
                    cn(row, col) += w;
                  }
              }
            }
        }
    }

  Eigen::MatrixXd dn = Eigen::MatrixXd::Zero(s * s, ndr * ndl);
  for (int r1p = 0; r1p < dr1; ++r1p)
    for (int r2p = 0; r2p < dr2; ++r2p)
      for (int l1a = 0; l1a < dl1; ++l1a)
        for (int l2b = 0; l2b < dl2; ++l2b) {
          const int col = ((r1p * dr2 + r2p) * dl1 + l1a) * dl2 + l2b;
          for (int oa = 0; oa < s; ++oa) {
            const double wo = d1(oa, r1p * dl1 + l1a);
            if (wo == 0.0) continue;
            for (int l2a = 0; l2a < dl2; ++l2a)
              for (int r2a = 0; r2a < dr2; ++r2a) {
                const double w = wo * c2(l2a * dr2 + r2a, oa);
                if (w == 0.0) continue;
                for (int ya = 0; ya < s; ++ya) {
                  const double wy = w * d2(ya, r2p * dl2 + l2a);
                  if (wy == 0.0) continue;
                  for (int yb = 0; yb < s; ++yb)
                    dn(ya * s + yb, col) += wy * d2(yb, r2a * dl2 + l2b);
                }
              }
          }
        }

  const int q = first.alphabet.quiescent;
  return PCA(Alphabet(s * s, q * s + q), ndl, ndr, std::move(cn), std::move(dn));
}

// Direct V factorization of a segment global map screened at cell i: the
// screen is the splitter at i, the side blocks bundle the remaining splitters
// (with the boundary preparation), and the two combiner bundles form the top
// layer. The construction is exact, so the residual is at rounding level.
struct PcaVWitness {
  StochMap A, C, B, L, R;
  double residual = 0.0;

  StochMap recompose() const {
    return compose(tensor_map(L, R), tensor_map(tensor_map(A, C), B));
  }
};

inline PcaVWitness v_witness_from_pca(const PCA& p, int w, int i,
                                      int boundary_symbol = 0) {
  detail::check_budget(p, w);
  if (i < 2 || i > w - 1)
    throw std::invalid_argument("v_witness_from_pca: screen cell must be interior");
  if (boundary_symbol < 0 || boundary_symbol >= p.dr)
    throw std::invalid_argument("v_witness_from_pca: boundary symbol out of range");

  // Layer-one wire labels: the left wire of cell j gets 10j, the right wire
  // 10j + 5, and the boundary wire sits at 5 so that sorting by label lays
  // the wires out as (r0, l1, r1, ..., l_w).
  auto wl = [](int j) { return 10 * j; };
  auto wr = [](int j) { return 10 * j + 5; };
  auto relabel_c = [&](int j) {
    // canonical C: in {0}, out {0 (l), 1 (r)}
    return StochMap(Region::uniform({j}, p.alphabet.size),
                    Region({wl(j), wr(j)}, {p.dl, p.dr}), p.C.matrix());
  };
  auto relabel_d = [&](int j) {
    // canonical D: in {0 (r_prev), 1 (l)}, out {0 (cell)}
    return StochMap(Region({wr(j - 1), wl(j)}, {p.dr, p.dl}),
                    Region::uniform({j}, p.alphabet.size), p.D.matrix());
  };

  StochMap a = as_preparation(point_state(Region({wr(0)}, {p.dr}), {boundary_symbol}));
  for (int j = 1; j < i; ++j) a = tensor_map(a, relabel_c(j));
  a = reshape_regions(a, a.in_region(),
                      Region({0}, {static_cast<int>(a.rows())}));

  StochMap c = StochMap(Region::uniform({i}, p.alphabet.size),
                        Region({1, 2}, {p.dl, p.dr}), p.C.matrix());

  StochMap b = relabel_c(i + 1);
  for (int j = i + 2; j <= w; ++j) b = tensor_map(b, relabel_c(j));
  b = trace_out_map(b, b.out_region().restricted_to({wr(w)}));
  b = reshape_regions(b, b.in_region(), Region({3}, {static_cast<int>(b.rows())}));

  StochMap l = relabel_d(1);
  for (int j = 2; j <= i; ++j) l = tensor_map(l, relabel_d(j));
  l = reshape_regions(l, Region({0, 1}, {static_cast<int>(a.rows()), p.dl}), l.out_region());

  StochMap r = relabel_d(i + 1);
  for (int j = i + 2; j <= w; ++j) r = tensor_map(r, relabel_d(j));
  r = reshape_regions(r, Region({2, 3}, {p.dr, static_cast<int>(b.rows())}), r.out_region());

  PcaVWitness witness{std::move(a), std::move(c), std::move(b), std::move(l), std::move(r)};
  StochMap reference = global_map(p, w, Boundary::fixed(boundary_symbol));
  witness.residual =
      (witness.recompose().matrix() - reference.matrix()).cwiseAbs().maxCoeff();
  return witness;
}

}  // namespace stochcell::pca
