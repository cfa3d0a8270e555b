#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "quadbp/model.hpp"

namespace quadbp {

// Per-edge permutations defining a k-cover. perm[(i,j)] with i < j is sigma
// such that cover node (i, alpha) couples to (j, sigma[alpha]); block (j,i)
// uses the inverse permutation, which is the only reading consistent with a
// symmetric covering matrix. Diagonal blocks are the identity.
struct CoverSpec {
  int fold = 1;
  std::map<std::pair<int, int>, std::vector<int>> perm;
};

// A k-cover's quadratic model together with the covering map back to the
// base. Cover nodes are ordered fiber-contiguously with the copy index
// fastest-varying: cover node id = base id * fold + copy.
struct CoveredModel {
  QuadraticModel model;
  std::vector<int> pi;  // cover node -> base node
  int fold = 1;
};

namespace detail {

inline bool is_permutation_vec(const std::vector<int>& p, int k) {
  if (static_cast<int>(p.size()) != k) return false;
  std::vector<bool> seen(k, false);
  for (int v : p) {
    if (v < 0 || v >= k || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

}  // namespace detail

inline CoveredModel build_cover(const QuadraticModel& base, const CoverSpec& spec) {
  if (spec.fold < 1) throw std::invalid_argument("build_cover: fold must be >= 1");
  const int n = base.n;
  const int k = spec.fold;
  CoveredModel cover;
  cover.fold = k;
  cover.model.n = n * k;
  cover.model.gamma = Matrix::Zero(n * k, n * k);
  cover.model.h = Vector::Zero(n * k);
  cover.pi.resize(n * k);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < k; ++a) {
      cover.pi[i * k + a] = i;
      cover.model.h[i * k + a] = base.h[i];
      cover.model.gamma(i * k + a, i * k + a) = base.gamma(i, i);
    }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (base.gamma(i, j) == 0.0) continue;
      auto it = spec.perm.find({i, j});
      if (it == spec.perm.end())
        throw std::invalid_argument("build_cover: missing permutation for an edge");
      const std::vector<int>& sigma = it->second;
      if (!detail::is_permutation_vec(sigma, k))
        throw std::invalid_argument("build_cover: block is not a permutation");
      for (int a = 0; a < k; ++a) {
        cover.model.gamma(i * k + a, j * k + sigma[a]) = base.gamma(i, j);
        cover.model.gamma(j * k + sigma[a], i * k + a) = base.gamma(i, j);
      }
    }
  return cover;
}

// The bipartite 2-cover: every base edge (i,j) lifts to (i_1,j_2) and
// (i_2,j_1). Copies with index 0 form one part, copies with index 1 the
// other; a bipartite base yields two disjoint copies.
inline CoveredModel kronecker_double_cover(const QuadraticModel& base) {
  CoverSpec spec;
  spec.fold = 2;
  for (int i = 0; i < base.n; ++i)
    for (int j = i + 1; j < base.n; ++j)
      if (base.gamma(i, j) != 0.0) spec.perm[{i, j}] = {1, 0};
  return build_cover(base, spec);
}

// The 2-cover witnessing failure of walk-summability: identity permutation on
// negative edges, swap on the rest. For a unit-diagonal base there is a unit
// vector z with z^T cover z = 1 - rho(|I - gamma|).
inline CoveredModel adversarial_two_cover(const QuadraticModel& base) {
  for (int i = 0; i < base.n; ++i)
    if (!(base.gamma(i, i) > 0.0))
      throw std::invalid_argument("adversarial_two_cover: diagonal must be positive");
  CoverSpec spec;
  spec.fold = 2;
  for (int i = 0; i < base.n; ++i)
    for (int j = i + 1; j < base.n; ++j)
      if (base.gamma(i, j) != 0.0)
        spec.perm[{i, j}] = base.gamma(i, j) < 0.0 ? std::vector<int>{0, 1}
                                                   : std::vector<int>{1, 0};
  return build_cover(base, spec);
}

// Seeded sampling of a 2-cover: each edge gets identity or swap with
// probability 1/2. Deterministic for a fixed seed.
inline CoveredModel random_two_cover(const QuadraticModel& base, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CoverSpec spec;
  spec.fold = 2;
  for (int i = 0; i < base.n; ++i)
    for (int j = i + 1; j < base.n; ++j)
      if (base.gamma(i, j) != 0.0)
        spec.perm[{i, j}] = (rng() & 1ull) ? std::vector<int>{1, 0} : std::vector<int>{0, 1};
  return build_cover(base, spec);
}

// lift(x)_v = x_{pi(v)}: constant on fibers.
inline Vector lift_vector(const Vector& x, const CoveredModel& cover) {
  if (x.size() * cover.fold != cover.model.n)
    throw std::invalid_argument("lift_vector: dimension mismatch");
  Vector y(cover.model.n);
  for (int v = 0; v < cover.model.n; ++v) y[v] = x[cover.pi[v]];
  return y;
}

// proj(y)_i = fiber average; proj(lift(x)) = x exactly.
inline Vector project_vector(const Vector& y, const CoveredModel& cover) {
  if (y.size() != cover.model.n)
    throw std::invalid_argument("project_vector: dimension mismatch");
  const int n = cover.model.n / cover.fold;
  Vector x = Vector::Zero(n);
  for (int v = 0; v < cover.model.n; ++v) x[cover.pi[v]] += y[v];
  return x / static_cast<double>(cover.fold);
}

// Reweighting parameters transported to the cover: the parameter of a cover
// edge is the parameter of the base edge it projects to.
inline EdgeParameters lift_parameters(const EdgeParameters& base_c,
                                      const DirectedEdgeIndex& base_idx,
                                      const CoveredModel& cover,
                                      const DirectedEdgeIndex& cover_idx) {
  EdgeParameters out;
  out.by_undirected.assign(cover_idx.undirected_count, 0.0);
  for (int e = 0; e < cover_idx.size(); ++e) {
    const auto [u, v] = cover_idx.edges[e];
    out.by_undirected[cover_idx.undirected_id[e]] =
        base_c.at_pair(base_idx, cover.pi[u], cover.pi[v]);
  }
  return out;
}

struct CoverValidation {
  bool valid = true;
  std::vector<std::string> violations;
};

// Checks fiber sizes, neighborhood bijections, h replication, and the
// block-permutation structure of the covering matrix.
inline CoverValidation validate_cover(const QuadraticModel& base, const CoveredModel& cover) {
  CoverValidation out;
  auto fail = [&out](std::string msg) {
    out.valid = false;
    out.violations.push_back(std::move(msg));
  };
  const int k = cover.fold;
  if (cover.model.n != base.n * k || static_cast<int>(cover.pi.size()) != cover.model.n) {
    fail("cover size is not fold * base size");
    return out;
  }
  std::vector<int> fiber_size(base.n, 0);
  for (int v = 0; v < cover.model.n; ++v) {
    if (cover.pi[v] < 0 || cover.pi[v] >= base.n) {
      fail("covering map out of range");
      return out;
    }
    ++fiber_size[cover.pi[v]];
  }
  for (int i = 0; i < base.n; ++i)
    if (fiber_size[i] != k)
      fail("fiber of node " + std::to_string(i) + " has size " + std::to_string(fiber_size[i]));

  const DirectedEdgeIndex base_idx = edge_set(base);
  const DirectedEdgeIndex cover_idx = edge_set(cover.model);
  for (int v = 0; v < cover.model.n; ++v) {
    std::set<int> image;
    bool dup = false;
    for (int w : cover_idx.neighbors[v]) dup |= !image.insert(cover.pi[w]).second;
    const auto& expected = base_idx.neighbors[cover.pi[v]];
    if (dup || image != std::set<int>(expected.begin(), expected.end()))
      fail("neighborhood not bijective at cover node " + std::to_string(v));
  }

  for (int v = 0; v < cover.model.n; ++v)
    if (cover.model.h[v] != base.h[cover.pi[v]])
      fail("h not replicated at cover node " + std::to_string(v));

  // Edge values must equal the base entry; within a block every row and
  // column carries at most one nonzero (permutation structure). Diagonal
  // blocks must be gamma_ii * identity.
  for (int v = 0; v < cover.model.n; ++v)
    for (int w : cover_idx.neighbors[v]) {
      const int bi = cover.pi[v];
      const int bj = cover.pi[w];
      if (bi == bj) continue;  // already reported as a neighborhood violation
      if (cover.model.gamma(v, w) != base.gamma(bi, bj))
        fail("edge value mismatch at (" + std::to_string(v) + "," + std::to_string(w) + ")");
    }
  for (int i = 0; i < base.n; ++i)
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b) {
        // Only meaningful when the fiber ordering is the canonical one.
        if (i * k + a >= cover.model.n || i * k + b >= cover.model.n) continue;
        if (cover.pi[i * k + a] != i || cover.pi[i * k + b] != i) continue;
        const double want = (a == b) ? base.gamma(i, i) : 0.0;
        if (cover.model.gamma(i * k + a, i * k + b) != want)
          fail("diagonal block of node " + std::to_string(i) + " is not gamma_ii * identity");
      }
  return out;
}

}  // namespace quadbp
