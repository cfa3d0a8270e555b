#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace quadbp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Returns (a + a^T)/2. Preserves the quadratic form x^T a x; symmetric input
// comes back bit-identical.
inline Matrix symmetrize(const Matrix& a) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("symmetrize: matrix must be square");
  return 0.5 * (a + a.transpose());
}

// One quadratic minimization instance: minimize 1/2 x^T gamma x - h^T x,
// equivalently solve gamma x = h. The off-diagonal nonzero pattern of gamma
// defines the factor-graph edge set.
struct QuadraticModel {
  int n = 0;
  Matrix gamma;  // symmetric
  Vector h;
};

// Builds a model from a possibly asymmetric coefficient matrix: gamma is
// stored symmetrized, h is checked for size.
inline QuadraticModel make_model(const Matrix& raw, Vector h) {
  if (raw.rows() != raw.cols())
    throw std::invalid_argument("make_model: matrix must be square");
  if (h.size() != raw.rows())
    throw std::invalid_argument("make_model: h dimension mismatch");
  QuadraticModel m;
  m.n = static_cast<int>(raw.rows());
  m.gamma = symmetrize(raw);
  m.h = std::move(h);
  return m;
}

// h defaults to the all-ones vector.
inline QuadraticModel make_model(const Matrix& raw) {
  return make_model(raw, Vector::Ones(raw.rows()));
}

// Enumeration of the 2|E| directed edges of a model, grouped by destination
// node with sources ascending. This is the canonical order used by the
// asynchronous sweep and by the directed-edge mean system.
struct DirectedEdgeIndex {
  struct DirectedEdge {
    int src = 0;
    int dst = 0;
  };

  int node_count = 0;
  int undirected_count = 0;
  std::vector<DirectedEdge> edges;
  std::vector<int> reverse_edge;            // involution: id of dst->src
  std::vector<int> undirected_id;           // shared by an edge and its reverse
  std::vector<std::vector<int>> neighbors;  // sorted adjacency lists
  std::vector<int> dst_offset;              // edges into j: [dst_offset[j], dst_offset[j+1])

  int size() const { return static_cast<int>(edges.size()); }

  // Directed edge id of src->dst, or -1 when absent.
  int edge_id(int src, int dst) const {
    const auto& nb = neighbors[dst];
    auto it = std::lower_bound(nb.begin(), nb.end(), src);
    if (it == nb.end() || *it != src) return -1;
    return dst_offset[dst] + static_cast<int>(it - nb.begin());
  }

  int degree(int i) const { return static_cast<int>(neighbors[i].size()); }

  int max_degree() const {
    int d = 0;
    for (const auto& nb : neighbors) d = std::max<int>(d, static_cast<int>(nb.size()));
    return d;
  }
};

// Edges are exactly the off-diagonal nonzeros of gamma (exact zero test, no
// thresholding).
inline DirectedEdgeIndex edge_set(const QuadraticModel& model) {
  DirectedEdgeIndex idx;
  idx.node_count = model.n;
  idx.neighbors.assign(model.n, {});
  for (int i = 0; i < model.n; ++i)
    for (int j = 0; j < model.n; ++j)
      if (i != j && model.gamma(i, j) != 0.0) idx.neighbors[i].push_back(j);

  idx.dst_offset.assign(model.n + 1, 0);
  for (int j = 0; j < model.n; ++j)
    idx.dst_offset[j + 1] = idx.dst_offset[j] + static_cast<int>(idx.neighbors[j].size());
  idx.edges.resize(idx.dst_offset[model.n]);
  for (int j = 0; j < model.n; ++j) {
    int k = idx.dst_offset[j];
    for (int i : idx.neighbors[j]) idx.edges[k++] = {i, j};
  }

  idx.reverse_edge.resize(idx.edges.size());
  idx.undirected_id.assign(idx.edges.size(), -1);
  int next_pair = 0;
  // Undirected ids in (min,max) lexicographic order.
  for (int i = 0; i < model.n; ++i)
    for (int j : idx.neighbors[i])
      if (i < j) {
        const int e = idx.edge_id(i, j);
        const int r = idx.edge_id(j, i);
        idx.undirected_id[e] = next_pair;
        idx.undirected_id[r] = next_pair;
        ++next_pair;
      }
  idx.undirected_count = next_pair;
  for (int e = 0; e < idx.size(); ++e)
    idx.reverse_edge[e] = idx.edge_id(idx.edges[e].dst, idx.edges[e].src);
  return idx;
}

// Symmetric per-edge reweighting parameters c_ij, stored once per undirected
// edge. c_ij must be nonzero (the message update divides by it).
struct EdgeParameters {
  std::vector<double> by_undirected;

  double at(const DirectedEdgeIndex& idx, int edge) const {
    return by_undirected[idx.undirected_id[edge]];
  }
  double at_pair(const DirectedEdgeIndex& idx, int i, int j) const {
    const int e = idx.edge_id(i, j);
    if (e < 0) throw std::invalid_argument("EdgeParameters: no such edge");
    return by_undirected[idx.undirected_id[e]];
  }
};

inline EdgeParameters make_parameters(const DirectedEdgeIndex& idx, double uniform_c) {
  if (uniform_c == 0.0) throw std::invalid_argument("make_parameters: c must be nonzero");
  EdgeParameters p;
  p.by_undirected.assign(idx.undirected_count, uniform_c);
  return p;
}

inline EdgeParameters make_parameters(const DirectedEdgeIndex& idx,
                                      const std::map<std::pair<int, int>, double>& per_edge) {
  EdgeParameters p;
  p.by_undirected.assign(idx.undirected_count, 0.0);
  std::vector<bool> seen(idx.undirected_count, false);
  for (const auto& [key, value] : per_edge) {
    const int e = idx.edge_id(key.first, key.second);
    if (e < 0) throw std::invalid_argument("make_parameters: key is not an edge");
    if (value == 0.0) throw std::invalid_argument("make_parameters: c must be nonzero");
    const int u = idx.undirected_id[e];
    if (seen[u] && p.by_undirected[u] != value)
      throw std::invalid_argument("make_parameters: conflicting values for one edge");
    p.by_undirected[u] = value;
    seen[u] = true;
  }
  for (int u = 0; u < idx.undirected_count; ++u)
    if (!seen[u]) throw std::invalid_argument("make_parameters: edge missing from map");
  return p;
}

// Reports every violated model invariant; an empty list means the model is
// usable by message passing and the diagnostics.
inline std::vector<std::string> validate_model(const Matrix& gamma, const Vector& h) {
  std::vector<std::string> out;
  if (gamma.rows() != gamma.cols()) {
    out.push_back("matrix is not square");
    return out;
  }
  const int n = static_cast<int>(gamma.rows());
  if (h.size() != n) out.push_back("h dimension mismatch");
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (gamma(i, j) != gamma(j, i)) {
        out.push_back("asymmetric at (" + std::to_string(i) + "," + std::to_string(j) + ")");
      }
  for (int i = 0; i < n; ++i)
    if (!(gamma(i, i) > 0.0))
      out.push_back("nonpositive diagonal at " + std::to_string(i));
  return out;
}

inline std::vector<std::string> validate_model(const QuadraticModel& model) {
  return validate_model(model.gamma, model.h);
}

}  // namespace quadbp
