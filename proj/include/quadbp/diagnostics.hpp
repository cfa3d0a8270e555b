#pragma once

#include <Eigen/Eigenvalues>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "quadbp/model.hpp"

namespace quadbp {

struct SpectralRadius {
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

namespace detail {

// Connected components of the support graph of a nonnegative matrix, treating
// the support as undirected.
inline std::vector<std::vector<int>> support_components(const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  std::vector<int> comp(n, -1);
  std::vector<std::vector<int>> out;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    const int id = static_cast<int>(out.size());
    out.emplace_back();
    std::vector<int> stack{s};
    comp[s] = id;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      out[id].push_back(v);
      for (int w = 0; w < n; ++w)
        if (comp[w] < 0 && (a(v, w) != 0.0 || a(w, v) != 0.0)) {
          comp[w] = id;
          stack.push_back(w);
        }
    }
  }
  return out;
}

// Collatz-Wielandt power iteration on the shifted block a_C + I, which is
// primitive whenever the component is irreducible. For x > 0 the ratios
// (Bx)_i / x_i enclose the Perron root, so the gap certifies the precision.
inline SpectralRadius perron_root(const Matrix& a, const std::vector<int>& comp, double tol,
                                  int max_iter, Vector* perron_vector_out) {
  const int m = static_cast<int>(comp.size());
  Matrix b(m, m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) b(r, c) = a(comp[r], comp[c]) + (r == c ? 1.0 : 0.0);
  Vector x = Vector::Ones(m);
  SpectralRadius result;
  double lo = 0.0, hi = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    Vector y = b * x;
    lo = std::numeric_limits<double>::infinity();
    hi = 0.0;
    for (int r = 0; r < m; ++r) {
      const double ratio = y[r] / x[r];
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    result.iterations = it;
    x = y / y.maxCoeff();
    if (hi - lo <= tol * std::max(1.0, hi)) {
      result.converged = true;
      break;
    }
  }
  result.value = 0.5 * (lo + hi) - 1.0;
  if (result.value < 0.0) result.value = 0.0;  // shift round-off guard
  if (perron_vector_out) *perron_vector_out = x;
  return result;
}

}  // namespace detail

// Spectral radius of an entrywise-nonnegative matrix by power iteration, run
// per connected component of the support graph (Perron theory applies per
// irreducible block). Non-convergence is reported with the best estimate.
inline SpectralRadius spectral_radius_nonneg(const Matrix& a, double tol = 1e-10,
                                             int max_iter = 200000) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("spectral_radius_nonneg: matrix must be square");
  if (max_iter < 1) throw std::invalid_argument("spectral_radius_nonneg: max_iter must be >= 1");
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      if (!(a(i, j) >= 0.0))
        throw std::invalid_argument("spectral_radius_nonneg: negative entry");
  SpectralRadius best;
  best.converged = true;
  for (const auto& comp : detail::support_components(a)) {
    const SpectralRadius r = detail::perron_root(a, comp, tol, max_iter, nullptr);
    best.value = std::max(best.value, r.value);
    best.converged = best.converged && r.converged;
    best.iterations = std::max(best.iterations, r.iterations);
  }
  return best;
}

// |I - D^{-1/2} gamma D^{-1/2}| for a positive-diagonal model.
inline Matrix walk_matrix(const QuadraticModel& model) {
  for (int i = 0; i < model.n; ++i)
    if (!(model.gamma(i, i) > 0.0))
      throw std::invalid_argument("walk_matrix: diagonal must be positive");
  Matrix r = Matrix::Zero(model.n, model.n);
  for (int i = 0; i < model.n; ++i)
    for (int j = 0; j < model.n; ++j)
      if (i != j)
        r(i, j) = std::abs(model.gamma(i, j)) /
                  std::sqrt(model.gamma(i, i) * model.gamma(j, j));
  return r;
}

struct WalkSummability {
  bool walk_summable = false;
  bool indeterminate = false;  // rho within tol of the strict boundary
  double rho = 0.0;
};

// Walk-summable iff rho(|I - D^{-1/2} gamma D^{-1/2}|) < 1. The definition is
// a strict inequality, so boundary cases within tol are flagged
// indeterminate.
inline WalkSummability walk_summability(const QuadraticModel& model, double tol = 1e-9) {
  WalkSummability out;
  const SpectralRadius r = spectral_radius_nonneg(walk_matrix(model));
  out.rho = r.value;
  out.walk_summable = r.value < 1.0 - tol;
  out.indeterminate = std::abs(r.value - 1.0) <= tol;
  return out;
}

// A positive vector w with |gamma_ii| w_i > sum_{j != i} |gamma_ij| w_j for
// every i, or nothing. Built from the Perron vector of the walk matrix, which
// certifies scaled diagonal dominance exactly when the model is walk-summable.
inline std::optional<Vector> sdd_witness(const QuadraticModel& model) {
  const Matrix r = walk_matrix(model);
  const WalkSummability ws = walk_summability(model);
  if (!ws.walk_summable) return std::nullopt;
  Vector x = Vector::Ones(model.n);
  for (const auto& comp : detail::support_components(r)) {
    Vector xc;
    detail::perron_root(r, comp, 1e-13, 200000, &xc);
    for (std::size_t k = 0; k < comp.size(); ++k) x[comp[k]] = xc[static_cast<int>(k)];
  }
  Vector w(model.n);
  for (int i = 0; i < model.n; ++i) w[i] = x[i] / std::sqrt(model.gamma(i, i));
  for (int i = 0; i < model.n; ++i) {
    double s = 0.0;
    for (int j = 0; j < model.n; ++j)
      if (j != i) s += std::abs(model.gamma(i, j)) * w[j];
    if (!(std::abs(model.gamma(i, i)) * w[i] > s)) return std::nullopt;
  }
  return w;
}

struct EigenCheck {
  bool positive_definite = false;
  double lambda_min = 0.0;
};

// Minimum eigenvalue by dense symmetric eigensolve.
inline EigenCheck positive_definite_check(const Matrix& gamma) {
  if (gamma.rows() != gamma.cols())
    throw std::invalid_argument("positive_definite_check: matrix must be square");
  for (int i = 0; i < gamma.rows(); ++i)
    for (int j = i + 1; j < gamma.cols(); ++j)
      if (gamma(i, j) != gamma(j, i))
        throw std::invalid_argument("positive_definite_check: matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(gamma, Eigen::EigenvaluesOnly);
  EigenCheck out;
  out.lambda_min = es.eigenvalues().minCoeff();
  out.positive_definite = out.lambda_min > 0.0;
  return out;
}

inline EigenCheck positive_definite_check(const QuadraticModel& model) {
  return positive_definite_check(model.gamma);
}

// The unrolled tree whose exact root elimination reproduces the belief at the
// root after `depth` iterations. Each tree node carries the base potential
// scaled by `weight`, the product of the message multipliers on the path to
// the root (c_ki for a regular child, c_ij - 1 for a backtracking child,
// c_ji on the root's own children); the edge to the parent carries coupling
// weight * gamma_uv / c_uv. Children whose multiplier is exactly zero are
// omitted, so c == 1 recovers the non-backtracking tree.
struct ComputationTree {
  struct Node {
    int origin = 0;    // base node this is a copy of
    int parent = -1;   // tree parent, -1 at the root
    int depth = 0;
    double weight = 1.0;    // multiplier on the node potential
    double coupling = 0.0;  // x_node * x_parent coefficient, 0 at the root
  };

  std::vector<Node> nodes;  // breadth-first: parents precede children
  int root = 0;
  int depth = 0;

  int size() const { return static_cast<int>(nodes.size()); }

  // Dense tree matrix and linear term; intended for small trees.
  QuadraticModel as_model(const QuadraticModel& base) const {
    QuadraticModel m;
    m.n = size();
    m.gamma = Matrix::Zero(m.n, m.n);
    m.h = Vector::Zero(m.n);
    for (int u = 0; u < m.n; ++u) {
      const Node& nd = nodes[u];
      m.gamma(u, u) = nd.weight * base.gamma(nd.origin, nd.origin);
      m.h[u] = nd.weight * base.h[nd.origin];
      if (nd.parent >= 0) {
        m.gamma(u, nd.parent) = nd.coupling;
        m.gamma(nd.parent, u) = nd.coupling;
      }
    }
    return m;
  }
};

inline ComputationTree build_computation_tree(const QuadraticModel& model,
                                              const DirectedEdgeIndex& idx,
                                              const EdgeParameters& c, int root, int depth) {
  if (root < 0 || root >= model.n)
    throw std::invalid_argument("build_computation_tree: root out of range");
  if (depth < 0) throw std::invalid_argument("build_computation_tree: depth must be >= 0");
  ComputationTree tree;
  tree.root = root;
  tree.depth = depth;
  tree.nodes.push_back({root, -1, 0, 1.0, 0.0});
  // Frontier expansion; each entry is a tree node whose children realize the
  // messages feeding the message (or belief) it represents.
  for (int u = 0; u < static_cast<int>(tree.nodes.size()); ++u) {
    const ComputationTree::Node nd = tree.nodes[u];
    if (nd.depth == depth) continue;
    const int v = nd.origin;
    const int parent_origin = nd.parent >= 0 ? tree.nodes[nd.parent].origin : -1;
    for (int k : idx.neighbors[v]) {
      const double ckv = c.at_pair(idx, k, v);
      // Multiplier carried by the child message m_{k->v} (backtracking
      // children re-enter the reverse message with weight c - 1).
      const double factor = (k == parent_origin) ? ckv - 1.0 : ckv;
      if (factor == 0.0) continue;
      const double w = nd.weight * factor;
      tree.nodes.push_back({k, u, nd.depth + 1, w, w * model.gamma(v, k) / ckv});
    }
  }
  return tree;
}

// Result of exact leaf-to-root elimination on a computation tree. curvature
// and linear are the root min-marginal coefficients (the belief A_root,
// B_root); lambda_min is the smallest eigenvalue of the tree matrix.
struct TreeElimination {
  bool unbounded = false;
  double curvature = 0.0;
  double linear = 0.0;
  double lambda_min = 0.0;
};

namespace detail {

// Number of eigenvalues of (tree matrix - shift I) that are <= 0, by
// Sylvester inertia of the tree factorization. Children are eliminated before
// parents, so one backward pass suffices. Pivots smaller in magnitude than
// pivmin (scaled as in LAPACK's Sturm bisection) are replaced by -pivmin to
// keep every division finite.
inline int tree_negative_inertia(const ComputationTree& tree, const QuadraticModel& base,
                                 double shift) {
  const int n = tree.size();
  std::vector<double> diag(n);
  double max_coupling_sq = 1.0;
  for (int u = 0; u < n; ++u) {
    const auto& nd = tree.nodes[u];
    diag[u] = nd.weight * base.gamma(nd.origin, nd.origin) - shift;
    max_coupling_sq = std::max(max_coupling_sq, nd.coupling * nd.coupling);
  }
  const double pivmin = std::numeric_limits<double>::min() * max_coupling_sq;
  int nonpositive = 0;
  for (int u = n - 1; u >= 1; --u) {
    const auto& nd = tree.nodes[u];
    if (std::abs(diag[u]) < pivmin) diag[u] = -pivmin;
    if (diag[u] < 0.0) ++nonpositive;
    diag[nd.parent] -= nd.coupling * nd.coupling / diag[u];
  }
  if (diag[0] <= 0.0) ++nonpositive;
  return nonpositive;
}

inline double tree_lambda_min(const ComputationTree& tree, const QuadraticModel& base,
                              double tol = 1e-11) {
  // Gershgorin enclosure of the tree spectrum.
  const int n = tree.size();
  std::vector<double> radius(n, 0.0);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (int u = 1; u < n; ++u) {
    radius[u] += std::abs(tree.nodes[u].coupling);
    radius[tree.nodes[u].parent] += std::abs(tree.nodes[u].coupling);
  }
  for (int u = 0; u < n; ++u) {
    const double d = tree.nodes[u].weight * base.gamma(tree.nodes[u].origin, tree.nodes[u].origin);
    lo = std::min(lo, d - radius[u]);
    hi = std::max(hi, d + radius[u]);
  }
  // Refine until the bracket is small relative to its own endpoints (with an
  // absolute floor near zero), so the result keeps relative precision even
  // when the Gershgorin enclosure is many orders of magnitude wider.
  while (hi - lo > tol * std::max(1.0, std::min(std::abs(lo), std::abs(hi)))) {
    const double mid = 0.5 * (lo + hi);
    if (tree_negative_inertia(tree, base, mid) >= 1)
      hi = mid;  // an eigenvalue lies below mid
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Exact positive-definiteness of the tree matrix (zero negative inertia at
// shift 0), independent of the bisection tolerance used for lambda_min.
inline bool tree_positive_definite(const ComputationTree& tree, const QuadraticModel& base) {
  return detail::tree_negative_inertia(tree, base, 0.0) == 0;
}

// Leaf-to-root Gaussian elimination. A pivot is valid when the curvature of
// the inner extremization is positive, i.e. when pivot and node weight share
// a sign (negative multipliers turn the inner minimization into a scaled
// maximization, as happens for c < 0); otherwise the message the subtree
// realizes is unbounded.
inline TreeElimination exact_tree_elimination(const ComputationTree& tree,
                                              const QuadraticModel& base) {
  const int n = tree.size();
  std::vector<double> diag(n), lin(n);
  for (int u = 0; u < n; ++u) {
    const auto& nd = tree.nodes[u];
    diag[u] = nd.weight * base.gamma(nd.origin, nd.origin);
    lin[u] = nd.weight * base.h[nd.origin];
  }
  TreeElimination out;
  for (int u = n - 1; u >= 1; --u) {
    const auto& nd = tree.nodes[u];
    if (!(diag[u] * nd.weight > 0.0)) {
      out.unbounded = true;
      break;
    }
    diag[nd.parent] -= nd.coupling * nd.coupling / diag[u];
    lin[nd.parent] -= lin[u] * nd.coupling / diag[u];
  }
  if (!out.unbounded) {
    out.curvature = diag[0];
    out.linear = lin[0];
  }
  out.lambda_min = detail::tree_lambda_min(tree, base);
  return out;
}

// A certificate that every computation tree generated with uniform c = r is
// scaled diagonally dominant, hence positive definite with eigenvalues
// bounded away from zero. slack is the smallest strict margin over the three
// Gershgorin inequality families (leaf, internal, root), none of which depend
// on the tree depth.
struct GershgorinCertificate {
  double r = 1.0;
  double s = 1.0;
  double slack = 0.0;
};

inline std::optional<GershgorinCertificate> gershgorin_certificate(const QuadraticModel& model,
                                                                   const DirectedEdgeIndex& idx,
                                                                   double r, double s) {
  if (!(r >= 1.0)) throw std::invalid_argument("gershgorin_certificate: r must be >= 1");
  if (!(s > 0.0)) throw std::invalid_argument("gershgorin_certificate: s must be positive");
  for (int i = 0; i < model.n; ++i)
    if (!(model.gamma(i, i) > 0.0))
      throw std::invalid_argument("gershgorin_certificate: diagonal must be positive");
  double slack = std::numeric_limits<double>::infinity();
  for (int i = 0; i < model.n; ++i) {
    const double dii = std::abs(model.gamma(i, i));
    double row_sum = 0.0;
    for (int k : idx.neighbors[i]) row_sum += std::abs(model.gamma(k, i));
    // Root family: |gamma_ii| > (s/r) sum_k |gamma_ki|.
    slack = std::min(slack, dii - (s / r) * row_sum);
    for (int p : idx.neighbors[i]) {
      const double gip = std::abs(model.gamma(i, p));
      // Leaf family: |gamma_ii| > |gamma_ip| / s.
      slack = std::min(slack, dii - gip / s);
      // Internal family:
      // |gamma_ii| > |gamma_ip|/s + (s/r) [ ((r-1)/r) |gamma_ip| + sum_{k != p} |gamma_ki| ].
      const double internal =
          gip / s + (s / r) * (((r - 1.0) / r) * gip + (row_sum - gip));
      slack = std::min(slack, dii - internal);
    }
  }
  if (!(slack > 0.0)) return std::nullopt;
  return GershgorinCertificate{r, s, slack};
}

// Two-phase search mirroring the existence proof: fix s just above the
// largest leaf ratio |gamma_ip| / |gamma_ii| (midpoint of the unit interval
// above it), then double r from 1 until the internal and root families hold.
inline std::optional<GershgorinCertificate> find_uniform_r(const QuadraticModel& model,
                                                           const DirectedEdgeIndex& idx,
                                                           double r_max = 1048576.0) {
  double max_ratio = 0.0;
  for (int i = 0; i < model.n; ++i) {
    if (!(model.gamma(i, i) > 0.0))
      throw std::invalid_argument("find_uniform_r: diagonal must be positive");
    for (int p : idx.neighbors[i])
      max_ratio = std::max(max_ratio, std::abs(model.gamma(i, p)) / std::abs(model.gamma(i, i)));
  }
  const double s = max_ratio + 0.5;
  for (double r = 1.0; r <= r_max; r *= 2.0) {
    auto cert = gershgorin_certificate(model, idx, r, s);
    if (cert) return cert;
  }
  return std::nullopt;
}

}  // namespace quadbp
