#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "stochcell/causality.hpp"
#include "stochcell/circuit.hpp"
#include "stochcell/pca.hpp"
#include "stochcell/state.hpp"
#include "stochcell/stoch_map.hpp"

namespace stochcell::io {

using nlohmann::json;

// Raised on malformed files; the message names the offending field or column.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline json cells_to_json(const Region& r) {
  json arr = json::array();
  for (int p = 0; p < r.cell_count(); ++p)
    arr.push_back({{"label", r.cells()[p]}, {"dim", r.dims()[p]}});
  return arr;
}

inline Region cells_from_json(const json& arr, const std::string& what) {
  if (!arr.is_array()) throw FormatError(what + ": expected an array of cells");
  std::vector<int> cells, dims;
  for (const auto& c : arr) {
    if (!c.contains("label") || !c.contains("dim"))
      throw FormatError(what + ": cell entries need label and dim");
    cells.push_back(c.at("label").get<int>());
    dims.push_back(c.at("dim").get<int>());
  }
  try {
    return Region(std::move(cells), std::move(dims));
  } catch (const std::invalid_argument& e) {
    throw FormatError(what + ": " + e.what());
  }
}

inline json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const json& rows, const std::string& what) {
  if (!rows.is_array() || rows.empty()) throw FormatError(what + ": expected rows");
  const auto nrows = rows.size();
  const auto ncols = rows.front().size();
  Eigen::MatrixXd m(nrows, ncols);
  for (std::size_t r = 0; r < nrows; ++r) {
    if (!rows[r].is_array() || rows[r].size() != ncols)
      throw FormatError(what + ": ragged matrix at row " + std::to_string(r));
    for (std::size_t c = 0; c < ncols; ++c) m(r, c) = rows[r][c].get<double>();
  }
  return m;
}

inline int infer_alphabet_size(const Region& a, const Region& b) {
  int s = 1;
  for (int d : a.dims()) s = std::max(s, d);
  for (int d : b.dims()) s = std::max(s, d);
  return s;
}

}  // namespace detail

inline json to_json(const StochMap& s, int alphabet_size = 0) {
  if (alphabet_size <= 0)
    alphabet_size = detail::infer_alphabet_size(s.in_region(), s.out_region());
  return json{{"alphabet_size", alphabet_size},
              {"in_cells", detail::cells_to_json(s.in_region())},
              {"out_cells", detail::cells_to_json(s.out_region())},
              {"matrix", detail::matrix_to_json(s.matrix())}};
}

inline StochMap stoch_map_from_json(const json& j, int* alphabet_size = nullptr) {
  for (const char* key : {"alphabet_size", "in_cells", "out_cells", "matrix"})
    if (!j.contains(key)) throw FormatError(std::string("map: missing field ") + key);
  Region in = detail::cells_from_json(j.at("in_cells"), "in_cells");
  Region out = detail::cells_from_json(j.at("out_cells"), "out_cells");
  Eigen::MatrixXd m = detail::matrix_from_json(j.at("matrix"), "matrix");
  if (m.rows() != out.word_count() || m.cols() != in.word_count())
    throw FormatError("map: matrix is " + std::to_string(m.rows()) + "x" +
                      std::to_string(m.cols()) + " but regions require " +
                      std::to_string(out.word_count()) + "x" + std::to_string(in.word_count()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    double sum = m.col(c).sum();
    if (std::abs(sum - 1.0) > kStochasticTol)
      throw FormatError("map: column " + std::to_string(c) + " (input word " +
                        format_word(word_at(in, c)) + ") sums to " + std::to_string(sum));
    if (m.col(c).minCoeff() < -kStochasticTol)
      throw FormatError("map: negative entry in column " + std::to_string(c));
  }
  if (alphabet_size) *alphabet_size = j.at("alphabet_size").get<int>();
  return StochMap(std::move(in), std::move(out), std::move(m));
}

inline json to_json(const State& s, int alphabet_size = 0) {
  if (alphabet_size <= 0)
    alphabet_size = detail::infer_alphabet_size(s.region(), s.region());
  json probs = json::array();
  for (Eigen::Index i = 0; i < s.probs().size(); ++i) probs.push_back(s.probs()[i]);
  return json{{"alphabet_size", alphabet_size},
              {"cells", detail::cells_to_json(s.region())},
              {"probs", std::move(probs)}};
}

inline State state_from_json(const json& j, int* alphabet_size = nullptr) {
  for (const char* key : {"alphabet_size", "cells", "probs"})
    if (!j.contains(key)) throw FormatError(std::string("state: missing field ") + key);
  Region cells = detail::cells_from_json(j.at("cells"), "cells");
  const auto& probs = j.at("probs");
  if (!probs.is_array() || static_cast<std::int64_t>(probs.size()) != cells.word_count())
    throw FormatError("state: probs length does not match cells");
  Eigen::VectorXd v(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) v[i] = probs[i].get<double>();
  double sum = v.sum();
  if (std::abs(sum - 1.0) > kStochasticTol)
    throw FormatError("state: probabilities sum to " + std::to_string(sum));
  if (alphabet_size) *alphabet_size = j.at("alphabet_size").get<int>();
  return State(std::move(cells), std::move(v));
}

inline json to_json(const pca::PCA& p) {
  return json{{"alphabet_size", p.alphabet.size},
              {"quiescent", p.alphabet.quiescent},
              {"dl", p.dl},
              {"dr", p.dr},
              {"C", detail::matrix_to_json(p.C.matrix())},
              {"D", detail::matrix_to_json(p.D.matrix())}};
}

inline pca::PCA pca_from_json(const json& j) {
  for (const char* key : {"alphabet_size", "dl", "dr", "C", "D"})
    if (!j.contains(key)) throw FormatError(std::string("pca: missing field ") + key);
  const int s = j.at("alphabet_size").get<int>();
  const int q = j.value("quiescent", 0);
  const int dl = j.at("dl").get<int>();
  const int dr = j.at("dr").get<int>();
  Eigen::MatrixXd c = detail::matrix_from_json(j.at("C"), "C");
  Eigen::MatrixXd d = detail::matrix_from_json(j.at("D"), "D");
  if (c.rows() != static_cast<Eigen::Index>(dl) * dr || c.cols() != s)
    throw FormatError("pca: C must be (dl*dr) x s");
  if (d.rows() != s || d.cols() != static_cast<Eigen::Index>(dr) * dl)
    throw FormatError("pca: D must be s x (dr*dl)");
  for (Eigen::Index col = 0; col < c.cols(); ++col)
    if (std::abs(c.col(col).sum() - 1.0) > kStochasticTol)
      throw FormatError("pca: column " + std::to_string(col) + " of C sums to " +
                        std::to_string(c.col(col).sum()));
  for (Eigen::Index col = 0; col < d.cols(); ++col)
    if (std::abs(d.col(col).sum() - 1.0) > kStochasticTol)
      throw FormatError("pca: column " + std::to_string(col) + " of D sums to " +
                        std::to_string(d.col(col).sum()));
  try {
    return pca::PCA(Alphabet(s, q), dl, dr, std::move(c), std::move(d));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("pca: ") + e.what());
  }
}

inline json to_json(const CircuitShape& shape) {
  json wires = json::array(), boxes = json::array(), layers = json::array();
  for (const auto& w : shape.wires) wires.push_back({{"id", w.id}, {"dim", w.dim}});
  for (const auto& b : shape.boxes)
    boxes.push_back({{"name", b.name}, {"in", b.in_wires}, {"out", b.out_wires}});
  for (const auto& layer : shape.layers) layers.push_back(layer);
  return json{{"wires", std::move(wires)},
              {"boxes", std::move(boxes)},
              {"layers", std::move(layers)},
              {"external_in", shape.external_in},
              {"external_out", shape.external_out}};
}

inline CircuitShape shape_from_json(const json& j) {
  for (const char* key : {"wires", "boxes", "layers", "external_in", "external_out"})
    if (!j.contains(key)) throw FormatError(std::string("shape: missing field ") + key);
  CircuitShape shape;
  for (const auto& w : j.at("wires"))
    shape.wires.push_back({w.at("id").get<int>(), w.at("dim").get<int>()});
  for (const auto& b : j.at("boxes"))
    shape.boxes.push_back({b.at("name").get<std::string>(),
                           b.at("in").get<std::vector<int>>(),
                           b.at("out").get<std::vector<int>>()});
  shape.layers = j.at("layers").get<std::vector<std::vector<int>>>();
  shape.external_in = j.at("external_in").get<std::vector<int>>();
  shape.external_out = j.at("external_out").get<std::vector<int>>();
  try {
    plan_layers(shape);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("shape: ") + e.what());
  }
  return shape;
}

inline json to_json(const causality::Verdict& v, json params = json::object(),
                    std::uint64_t seed = 0) {
  json out{{"property", causality::to_string(v.property)},
           {"holds", causality::to_string(v.status)},
           {"params", std::move(params)},
           {"seed", seed}};
  if (!std::isnan(v.residual)) out["residual"] = v.residual;
  if (!v.note.empty()) out["note"] = v.note;
  if (!v.factor_witness.empty()) {
    json w = json::object();
    for (const auto& [name, map] : v.factor_witness) w[name] = to_json(map);
    out["witness"] = std::move(w);
  }
  if (v.shape_witness) {
    json boxes = json::object();
    for (std::size_t b = 0; b < v.shape_witness->boxes.size(); ++b)
      boxes[v.shape_witness->shape.boxes[b].name] =
          detail::matrix_to_json(v.shape_witness->boxes[b]);
    out["witness"] = json{{"shape", to_json(v.shape_witness->shape)},
                          {"boxes", std::move(boxes)}};
  }
  json counterexample = json::object();
  if (v.signalling_counterexample) {
    counterexample["input_a"] = format_word(v.signalling_counterexample->input_a);
    counterexample["input_b"] = format_word(v.signalling_counterexample->input_b);
    counterexample["output_cell"] = v.signalling_counterexample->output_cell;
    counterexample["deviation"] = v.signalling_counterexample->deviation;
  }
  if (v.failing_cell) counterexample["cell"] = *v.failing_cell;
  if (v.failing_symbol) counterexample["symbol"] = *v.failing_symbol;
  if (!counterexample.empty()) out["counterexample"] = std::move(counterexample);
  return out;
}

// Per-step per-cell marginals in long form.
inline std::string trajectory_csv(const pca::TrajectoryStats& stats) {
  std::ostringstream os;
  os << "step,cell,symbol,probability,stderr\n";
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (std::size_t t = 0; t < stats.marginals.size(); ++t)
    for (std::size_t c = 0; c < stats.marginals[t].size(); ++c)
      for (std::size_t y = 0; y < stats.marginals[t][c].size(); ++y) {
        double se = stats.stderrs.empty() ? 0.0 : stats.stderrs[t][c][y];
        os << t << ',' << c + 1 << ',' << y << ',' << fmt(stats.marginals[t][c][y]) << ','
           << fmt(se) << '\n';
      }
  return os.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw FormatError("failed while writing " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline json read_json_file(const std::string& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

// FNV-1a over the file bytes, for input digests in run reports.
inline std::string fnv1a_digest(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace stochcell::io
