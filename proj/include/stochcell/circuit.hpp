#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "stochcell/stoch_map.hpp"

namespace stochcell {

// A wiring DAG of named stochastic boxes, used as a factorization target.
// Every wire has exactly one producer and one consumer (external inputs are
// produced by the environment, external outputs consumed by it). Boxes are
// grouped into layers; evaluating the shape composes the layers in order.
struct ShapeWire {
  int id = 0;
  int dim = 1;
};

struct ShapeBox {
  std::string name;
  std::vector<int> in_wires;   // declared order fixes the box's column radix
  std::vector<int> out_wires;  // declared order fixes the box's row radix
};

struct CircuitShape {
  std::vector<ShapeWire> wires;
  std::vector<ShapeBox> boxes;
  std::vector<std::vector<int>> layers;  // box indices, applied first to last
  std::vector<int> external_in;          // wire ids in cell order
  std::vector<int> external_out;

  int wire_dim(int id) const {
    for (const auto& w : wires)
      if (w.id == id) return w.dim;
    throw std::invalid_argument("CircuitShape: unknown wire id " + std::to_string(id));
  }

  std::int64_t box_rows(int b) const {
    std::int64_t n = 1;
    for (int w : boxes[b].out_wires) n *= wire_dim(w);
    return n;
  }
  std::int64_t box_cols(int b) const {
    std::int64_t n = 1;
    for (int w : boxes[b].in_wires) n *= wire_dim(w);
    return n;
  }
};

// One layer of the evaluation plan: a tensor of boxes plus identity wires,
// with rows/columns indexed by the live wires sorted by id.
struct LayerPlan {
  std::vector<int> in_wires, out_wires;  // sorted ids
  std::vector<int> in_dims, out_dims;
  struct Slot {
    int box;
    std::vector<int> in_pos;   // positions in in_wires, in declared order
    std::vector<int> out_pos;  // positions in out_wires, in declared order
    std::vector<int> in_dims, out_dims;
  };
  std::vector<Slot> slots;
  std::vector<std::pair<int, int>> passthrough;  // (out position, in position)
  std::int64_t in_count = 1, out_count = 1;
};

namespace detail {

inline std::int64_t checked_product(const std::vector<int>& dims) {
  std::int64_t n = 1;
  for (int d : dims) {
    n *= d;
    if (n > (std::int64_t{1} << 30)) throw std::invalid_argument("CircuitShape: space too large");
  }
  return n;
}

}  // namespace detail

// Validates the shape and derives the per-layer evaluation plan.
inline std::vector<LayerPlan> plan_layers(const CircuitShape& shape) {
  std::map<int, int> dim_of;
  for (const auto& w : shape.wires) {
    if (w.dim < 1) throw std::invalid_argument("CircuitShape: wire dim must be >= 1");
    if (!dim_of.emplace(w.id, w.dim).second)
      throw std::invalid_argument("CircuitShape: duplicate wire id " + std::to_string(w.id));
  }

  std::map<int, int> producers, consumers;
  auto count_all = [&](const std::vector<int>& ids, std::map<int, int>& tally,
                       const char* what) {
    std::set<int> seen;
    for (int id : ids) {
      if (!dim_of.count(id)) throw std::invalid_argument("CircuitShape: undeclared wire");
      if (!seen.insert(id).second)
        throw std::invalid_argument(std::string("CircuitShape: wire repeated in ") + what);
      ++tally[id];
    }
  };
  count_all(shape.external_in, producers, "external_in");
  count_all(shape.external_out, consumers, "external_out");
  std::vector<char> placed(shape.boxes.size(), 0);
  for (std::size_t b = 0; b < shape.boxes.size(); ++b) {
    count_all(shape.boxes[b].in_wires, consumers, "box inputs");
    count_all(shape.boxes[b].out_wires, producers, "box outputs");
  }
  for (const auto& [id, dim] : dim_of) {
    (void)dim;
    if (producers[id] != 1 || consumers[id] != 1)
      throw std::invalid_argument("CircuitShape: wire " + std::to_string(id) +
                                  " must have exactly one producer and one consumer");
  }

  std::set<int> live(shape.external_in.begin(), shape.external_in.end());
  std::vector<LayerPlan> plans;
  for (const auto& layer : shape.layers) {
    LayerPlan plan;
    plan.in_wires.assign(live.begin(), live.end());
    std::set<int> consumed;
    for (int b : layer) {
      if (b < 0 || b >= static_cast<int>(shape.boxes.size()) || placed[b])
        throw std::invalid_argument("CircuitShape: bad layer assignment");
      placed[b] = 1;
      for (int id : shape.boxes[b].in_wires) {
        if (!live.count(id))
          throw std::invalid_argument("CircuitShape: box consumes a wire that is not live");
        consumed.insert(id);
      }
    }
    for (int b : layer)
      for (int id : shape.boxes[b].in_wires) live.erase(id);
    for (int b : layer)
      for (int id : shape.boxes[b].out_wires) {
        if (live.count(id)) throw std::invalid_argument("CircuitShape: wire produced while live");
        live.insert(id);
      }
    plan.out_wires.assign(live.begin(), live.end());

    auto position = [](const std::vector<int>& v, int id) {
      return static_cast<int>(std::lower_bound(v.begin(), v.end(), id) - v.begin());
    };
    for (int id : plan.in_wires) plan.in_dims.push_back(dim_of[id]);
    for (int id : plan.out_wires) plan.out_dims.push_back(dim_of[id]);
    plan.in_count = detail::checked_product(plan.in_dims);
    plan.out_count = detail::checked_product(plan.out_dims);
    for (int b : layer) {
      LayerPlan::Slot slot;
      slot.box = b;
      for (int id : shape.boxes[b].in_wires) {
        slot.in_pos.push_back(position(plan.in_wires, id));
        slot.in_dims.push_back(dim_of[id]);
      }
      for (int id : shape.boxes[b].out_wires) {
        slot.out_pos.push_back(position(plan.out_wires, id));
        slot.out_dims.push_back(dim_of[id]);
      }
      plan.slots.push_back(std::move(slot));
    }
    for (int id : plan.in_wires)
      if (!consumed.count(id))
        plan.passthrough.emplace_back(position(plan.out_wires, id), position(plan.in_wires, id));
    plans.push_back(std::move(plan));
  }

  for (std::size_t b = 0; b < shape.boxes.size(); ++b)
    if (!placed[b]) throw std::invalid_argument("CircuitShape: box not assigned to any layer");
  std::set<int> want(shape.external_out.begin(), shape.external_out.end());
  if (live != want)
    throw std::invalid_argument("CircuitShape: final live wires differ from external outputs");
  if (!plans.empty()) {
    // The first layer's input order must be the external input order by id.
    std::vector<int> sorted_in(shape.external_in.begin(), shape.external_in.end());
    std::sort(sorted_in.begin(), sorted_in.end());
    if (plans.front().in_wires != sorted_in)
      throw std::invalid_argument("CircuitShape: inconsistent external inputs");
  }
  return plans;
}

namespace detail {

inline void decode_mixed(std::int64_t idx, const std::vector<int>& dims, std::vector<int>& out) {
  out.resize(dims.size());
  for (int p = static_cast<int>(dims.size()) - 1; p >= 0; --p) {
    out[p] = static_cast<int>(idx % dims[p]);
    idx /= dims[p];
  }
}

inline std::int64_t encode_positions(const std::vector<int>& word, const std::vector<int>& pos,
                                     const std::vector<int>& dims) {
  std::int64_t idx = 0;
  for (std::size_t k = 0; k < pos.size(); ++k) idx = idx * dims[k] + word[pos[k]];
  return idx;
}

}  // namespace detail

// Dense matrix of one layer given the box assignment (boxes indexed as in the
// shape; each matrix is rows = out words, cols = in words, declared order).
inline Eigen::MatrixXd layer_matrix(const LayerPlan& plan,
                                    const std::vector<Eigen::MatrixXd>& boxes) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(plan.out_count, plan.in_count);
  std::vector<int> in_word, out_word;
  std::vector<std::vector<std::int64_t>> slot_cols(plan.slots.size());
  std::vector<std::vector<int>> pass_in(plan.in_count);
  for (std::int64_t c = 0; c < plan.in_count; ++c) {
    detail::decode_mixed(c, plan.in_dims, in_word);
    for (std::size_t s = 0; s < plan.slots.size(); ++s)
      slot_cols[s].push_back(
          detail::encode_positions(in_word, plan.slots[s].in_pos, plan.slots[s].in_dims));
    for (auto& [op, ip] : plan.passthrough) {
      (void)op;
      pass_in[c].push_back(in_word[ip]);
    }
  }
  for (std::int64_t r = 0; r < plan.out_count; ++r) {
    detail::decode_mixed(r, plan.out_dims, out_word);
    std::vector<std::int64_t> slot_rows(plan.slots.size());
    for (std::size_t s = 0; s < plan.slots.size(); ++s)
      slot_rows[s] =
          detail::encode_positions(out_word, plan.slots[s].out_pos, plan.slots[s].out_dims);
    std::vector<int> pass_out;
    for (auto& [op, ip] : plan.passthrough) {
      (void)ip;
      pass_out.push_back(out_word[op]);
    }
    for (std::int64_t c = 0; c < plan.in_count; ++c) {
      if (pass_out != pass_in[c]) continue;
      double v = 1.0;
      for (std::size_t s = 0; s < plan.slots.size() && v != 0.0; ++s)
        v *= boxes[plan.slots[s].box](slot_rows[s], slot_cols[s][c]);
      m(r, c) = v;
    }
  }
  return m;
}

// End-to-end matrix of the whole shape under a box assignment.
inline Eigen::MatrixXd eval_shape(const CircuitShape& shape,
                                  const std::vector<Eigen::MatrixXd>& boxes) {
  auto plans = plan_layers(shape);
  if (plans.empty()) throw std::invalid_argument("eval_shape: shape has no layers");
  Eigen::MatrixXd m = layer_matrix(plans.front(), boxes);
  for (std::size_t k = 1; k < plans.size(); ++k) m = layer_matrix(plans[k], boxes) * m;
  return m;
}

// True when the shape's end-to-end signature matches the map's regions
// (dimensions by position; wire ids need not equal cell labels).
inline bool signature_matches(const CircuitShape& shape, const StochMap& target) {
  // External wire lists are given in cell order; the evaluation indexes live
  // wires sorted by id, so the builder must keep both orders consistent.
  std::vector<int> in_sorted = shape.external_in, out_sorted = shape.external_out;
  if (!std::is_sorted(in_sorted.begin(), in_sorted.end()) ||
      !std::is_sorted(out_sorted.begin(), out_sorted.end()))
    return false;
  if (static_cast<int>(in_sorted.size()) != target.in_region().cell_count()) return false;
  if (static_cast<int>(out_sorted.size()) != target.out_region().cell_count()) return false;
  for (std::size_t k = 0; k < in_sorted.size(); ++k)
    if (shape.wire_dim(in_sorted[k]) != target.in_region().dim_at(static_cast<int>(k)))
      return false;
  for (std::size_t k = 0; k < out_sorted.size(); ++k)
    if (shape.wire_dim(out_sorted[k]) != target.out_region().dim_at(static_cast<int>(k)))
      return false;
  return true;
}

// Hidden wire dimensions of the V template.
struct VWireDims {
  int l_prime = 2, l = 2, r = 2, r_prime = 2;
  VWireDims() = default;
  VWireDims(int lp, int l_, int r_, int rp) : l_prime(lp), l(l_), r(r_), r_prime(rp) {}
  explicit VWireDims(int h) : l_prime(h), l(h), r(h), r_prime(h) {}
};

namespace detail {

// Wire id scheme shared by the shape builders: external input of cell c gets
// id 8c, the output wire of cell c gets 8c+4, and hidden wires are slotted
// between so that sorting by id reproduces the intended spatial order.
inline constexpr int wire_in(int cell) { return 8 * cell; }
inline constexpr int wire_out(int cell) { return 8 * cell + 4; }

}  // namespace detail

// Two-layer V wiring screened at input cell i: layer one is A (x) C (x) B
// where C reads cell i and emits wires l, r; layer two is L (x) R producing
// the outputs at i and its successor from (l', l) and (r, r'). Outputs away
// from the screen are produced directly by A and B.
inline CircuitShape v_shape(const Region& in, const Region& out, int i, VWireDims dims) {
  if (!in.contains_label(i)) throw std::invalid_argument("v_shape: screen cell not an input");
  if (!out.contains_label(i)) throw std::invalid_argument("v_shape: no output at screen cell");
  int succ = -1;
  for (int c : out.cells())
    if (c > i) {
      succ = c;
      break;
    }
  if (succ < 0) throw std::invalid_argument("v_shape: no output after the screen cell");

  using detail::wire_in;
  using detail::wire_out;
  const int l_prime = 8 * i - 3, l = 8 * i - 2, r = 8 * i + 5, r_prime = 8 * i + 6;

  CircuitShape shape;
  for (int p = 0; p < in.cell_count(); ++p)
    shape.wires.push_back({wire_in(in.cells()[p]), in.dim_at(p)});
  for (int p = 0; p < out.cell_count(); ++p)
    shape.wires.push_back({wire_out(out.cells()[p]), out.dim_at(p)});
  shape.wires.push_back({l_prime, dims.l_prime});
  shape.wires.push_back({l, dims.l});
  shape.wires.push_back({r, dims.r});
  shape.wires.push_back({r_prime, dims.r_prime});

  ShapeBox a{"A", {}, {}}, c_box{"C", {wire_in(i)}, {l, r}}, b{"B", {}, {}};
  ShapeBox l_box{"L", {l_prime, l}, {wire_out(i)}}, r_box{"R", {r, r_prime}, {wire_out(succ)}};
  for (int c : in.cells()) {
    if (c < i) a.in_wires.push_back(wire_in(c));
    if (c > i) b.in_wires.push_back(wire_in(c));
  }
  for (int c : out.cells()) {
    if (c < i) a.out_wires.push_back(wire_out(c));
    if (c > succ) b.out_wires.push_back(wire_out(c));
  }
  a.out_wires.push_back(l_prime);
  b.out_wires.insert(b.out_wires.begin(), r_prime);

  shape.boxes = {a, c_box, b, l_box, r_box};
  shape.layers = {{0, 1, 2}, {3, 4}};
  for (int c : in.cells()) shape.external_in.push_back(wire_in(c));
  for (int c : out.cells()) shape.external_out.push_back(wire_out(c));
  return shape;
}

// Hidden wire dimensions of the VV template (two adjacent screens).
struct VVWireDims {
  int l_prime = 2, l1 = 2, r1 = 2, l2 = 2, r2 = 2, r_pp = 2;
  VVWireDims() = default;
  explicit VVWireDims(int h) : l_prime(h), l1(h), r1(h), l2(h), r2(h), r_pp(h) {}
};

// Double-V wiring with screens at input cells i and j (the next input label):
// layer one is A (x) C1 (x) C2 (x) B, layer two is L (x) M (x) R where M
// combines the right wire of the first screen with the left wire of the
// second. Setting the second screen to a plain copy and R to an identity
// collapses the template onto the V at i.
inline CircuitShape vv_shape(const Region& in, const Region& out, int i, VVWireDims dims) {
  if (!in.contains_label(i)) throw std::invalid_argument("vv_shape: screen cell not an input");
  int j = -1;
  for (int c : in.cells())
    if (c > i) {
      j = c;
      break;
    }
  if (j < 0 || !out.contains_label(i) || !out.contains_label(j))
    throw std::invalid_argument("vv_shape: need inputs and outputs at two adjacent cells");
  int k = -1;
  for (int c : out.cells())
    if (c > j) {
      k = c;
      break;
    }
  if (k < 0) throw std::invalid_argument("vv_shape: no output after the second screen");
  for (int c : out.cells())
    if (c > i && c < j) throw std::invalid_argument("vv_shape: output strictly between screens");

  using detail::wire_in;
  using detail::wire_out;
  const int l_prime = 8 * i - 3, l1 = 8 * i - 2, r1 = 8 * i + 1, l2 = 8 * i + 2;
  const int r2 = 8 * j + 1, r_pp = 8 * j + 2;

  CircuitShape shape;
  for (int p = 0; p < in.cell_count(); ++p)
    shape.wires.push_back({wire_in(in.cells()[p]), in.dim_at(p)});
  for (int p = 0; p < out.cell_count(); ++p)
    shape.wires.push_back({wire_out(out.cells()[p]), out.dim_at(p)});
  shape.wires.push_back({l_prime, dims.l_prime});
  shape.wires.push_back({l1, dims.l1});
  shape.wires.push_back({r1, dims.r1});
  shape.wires.push_back({l2, dims.l2});
  shape.wires.push_back({r2, dims.r2});
  shape.wires.push_back({r_pp, dims.r_pp});

  ShapeBox a{"A", {}, {}}, c1{"C1", {wire_in(i)}, {l1, r1}}, c2{"C2", {wire_in(j)}, {l2, r2}};
  ShapeBox b{"B", {}, {}};
  ShapeBox l_box{"L", {l_prime, l1}, {wire_out(i)}};
  ShapeBox m_box{"M", {r1, l2}, {wire_out(j)}};
  ShapeBox r_box{"R", {r2, r_pp}, {wire_out(k)}};
  for (int c : in.cells()) {
    if (c < i) a.in_wires.push_back(wire_in(c));
    if (c > j) b.in_wires.push_back(wire_in(c));
  }
  for (int c : out.cells()) {
    if (c < i) a.out_wires.push_back(wire_out(c));
    if (c > k) b.out_wires.push_back(wire_out(c));
  }
  a.out_wires.push_back(l_prime);
  b.out_wires.insert(b.out_wires.begin(), r_pp);

  shape.boxes = {a, c1, c2, b, l_box, m_box, r_box};
  shape.layers = {{0, 1, 2, 3}, {4, 5, 6}};
  for (int c : in.cells()) shape.external_in.push_back(wire_in(c));
  for (int c : out.cells()) shape.external_out.push_back(wire_out(c));
  return shape;
}

// Width-w periodic cell-splitter/combiner wiring: layer one has one splitter
// per cell (cell -> left wire, right wire), layer two one combiner per cell
// taking the previous cell's right wire and the own left wire; the last right
// wire wraps around to the first combiner.
inline CircuitShape pca_ring_shape(int width, int cell_dim, int dl, int dr) {
  if (width < 1) throw std::invalid_argument("pca_ring_shape: width must be >= 1");
  using detail::wire_in;
  using detail::wire_out;
  auto wl = [](int c) { return 8 * c + 1; };
  auto wr = [](int c) { return 8 * c + 2; };

  CircuitShape shape;
  std::vector<int> splitters, combiners;
  for (int c = 1; c <= width; ++c) {
    shape.wires.push_back({wire_in(c), cell_dim});
    shape.wires.push_back({wire_out(c), cell_dim});
    shape.wires.push_back({wl(c), dl});
    shape.wires.push_back({wr(c), dr});
  }
  for (int c = 1; c <= width; ++c) {
    shape.boxes.push_back({"C" + std::to_string(c), {wire_in(c)}, {wl(c), wr(c)}});
    splitters.push_back(static_cast<int>(shape.boxes.size()) - 1);
  }
  for (int c = 1; c <= width; ++c) {
    int prev = c == 1 ? width : c - 1;
    shape.boxes.push_back({"D" + std::to_string(c), {wr(prev), wl(c)}, {wire_out(c)}});
    combiners.push_back(static_cast<int>(shape.boxes.size()) - 1);
  }
  shape.layers = {splitters, combiners};
  for (int c = 1; c <= width; ++c) shape.external_in.push_back(wire_in(c));
  for (int c = 1; c <= width; ++c) shape.external_out.push_back(wire_out(c));
  return shape;
}

}  // namespace stochcell
