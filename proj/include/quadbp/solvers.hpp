#pragma once

#include <Eigen/LU>

#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "quadbp/engine.hpp"
#include "quadbp/model.hpp"

namespace quadbp {

// Ground-truth solve of gamma x = h by dense factorization.
inline Vector direct_solve(const QuadraticModel& model) {
  Eigen::FullPivLU<Matrix> lu(model.gamma);
  if (!lu.isInvertible()) throw std::runtime_error("direct_solve: singular matrix");
  return lu.solve(model.h);
}

// Iterate sequence of a classical solver, including the start vector.
struct IterateTrace {
  std::vector<Vector> iterates;
  std::vector<double> residuals;  // ||gamma x - h||_2 per iterate
  bool converged = false;

  // (x^t + x^{t-1})/2, the averaged sequence attached to the Jacobi run.
  Vector averaged(std::size_t t) const {
    if (t < 1 || t >= iterates.size())
      throw std::invalid_argument("IterateTrace::averaged: index out of range");
    return 0.5 * (iterates[t] + iterates[t - 1]);
  }
};

namespace detail {

inline void check_diagonal(const QuadraticModel& model, const char* who) {
  for (int i = 0; i < model.n; ++i)
    if (model.gamma(i, i) == 0.0)
      throw std::invalid_argument(std::string(who) + ": zero diagonal entry");
}

}  // namespace detail

// x^t_j = (h_j - sum_{k != j} gamma_jk x^{t-1}_k) / gamma_jj.
// Converged when ||x^t - x^{t-1}||_inf <= tol.
inline IterateTrace jacobi_run(const QuadraticModel& model, const Vector& x0, double tol,
                               int max_iter) {
  detail::check_diagonal(model, "jacobi_run");
  if (x0.size() != model.n) throw std::invalid_argument("jacobi_run: x0 dimension mismatch");
  IterateTrace trace;
  Vector x = x0;
  trace.iterates.push_back(x);
  trace.residuals.push_back((model.gamma * x - model.h).norm());
  for (int t = 1; t <= max_iter; ++t) {
    Vector next(model.n);
    for (int j = 0; j < model.n; ++j) {
      double s = model.h[j];
      for (int k = 0; k < model.n; ++k)
        if (k != j) s -= model.gamma(j, k) * x[k];
      next[j] = s / model.gamma(j, j);
    }
    const double change = (next - x).lpNorm<Eigen::Infinity>();
    x = std::move(next);
    trace.iterates.push_back(x);
    trace.residuals.push_back((model.gamma * x - model.h).norm());
    if (change <= tol) {
      trace.converged = true;
      break;
    }
  }
  return trace;
}

// One iteration = one full sweep over `order`; in-sweep updates use current
// values. For symmetric positive semidefinite gamma with positive diagonal
// and a solvable system this converges.
inline IterateTrace gauss_seidel_run(const QuadraticModel& model, const Vector& x0,
                                     std::span<const int> order, double tol, int max_iter) {
  detail::check_diagonal(model, "gauss_seidel_run");
  if (x0.size() != model.n)
    throw std::invalid_argument("gauss_seidel_run: x0 dimension mismatch");
  IterateTrace trace;
  Vector x = x0;
  trace.iterates.push_back(x);
  trace.residuals.push_back((model.gamma * x - model.h).norm());
  for (int t = 1; t <= max_iter; ++t) {
    Vector prev = x;
    for (int j : order) {
      double s = model.h[j];
      for (int k = 0; k < model.n; ++k)
        if (k != j) s -= model.gamma(j, k) * x[k];
      x[j] = s / model.gamma(j, j);
    }
    trace.iterates.push_back(x);
    trace.residuals.push_back((model.gamma * x - model.h).norm());
    if ((x - prev).lpNorm<Eigen::Infinity>() <= tol) {
      trace.converged = true;
      break;
    }
  }
  return trace;
}

inline IterateTrace gauss_seidel_run(const QuadraticModel& model, const Vector& x0, double tol,
                                     int max_iter) {
  std::vector<int> order(model.n);
  std::iota(order.begin(), order.end(), 0);
  return gauss_seidel_run(model, x0, order, tol, max_iter);
}

// The 2n x 2n doubled system [[D, M], [M, D]] with D = diag(gamma),
// M = gamma - D, and h duplicated. Gauss-Seidel on this system interleaves
// two Jacobi iterates of the base system.
inline QuadraticModel double_model(const QuadraticModel& model) {
  const int n = model.n;
  Matrix g = Matrix::Zero(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    g(i, i) = model.gamma(i, i);
    g(n + i, n + i) = model.gamma(i, i);
    for (int j = 0; j < n; ++j)
      if (i != j) {
        g(i, n + j) = model.gamma(i, j);
        g(n + i, j) = model.gamma(i, j);
      }
  }
  Vector h(2 * n);
  h.head(n) = model.h;
  h.tail(n) = model.h;
  QuadraticModel out;
  out.n = 2 * n;
  out.gamma = std::move(g);
  out.h = std::move(h);
  return out;
}

// Checks that Gauss-Seidel on the doubled system, swept in order 1..2n from
// y0 = [x0; x0], reproduces y^t = [x^{2t-1}; x^{2t}] of the Jacobi run for
// all t <= steps. The tolerance absorbs summation reassociation only.
inline bool jacobi_gs_embedding_check(const QuadraticModel& model, const Vector& x0, int steps,
                                      double tol = 1e-12) {
  if (steps < 1) throw std::invalid_argument("jacobi_gs_embedding_check: steps must be >= 1");
  const QuadraticModel doubled = double_model(model);
  // negative tolerance: never stop early, even at an exact fixed point
  IterateTrace jac = jacobi_run(model, x0, -1.0, 2 * steps);
  Vector y(2 * model.n);
  y.head(model.n) = x0;
  y.tail(model.n) = x0;
  std::vector<int> order(2 * model.n);
  std::iota(order.begin(), order.end(), 0);
  for (int t = 1; t <= steps; ++t) {
    for (int j : order) {
      double s = doubled.h[j];
      for (int k = 0; k < doubled.n; ++k)
        if (k != j) s -= doubled.gamma(j, k) * y[k];
      y[j] = s / doubled.gamma(j, j);
    }
    if (static_cast<std::size_t>(2 * t) >= jac.iterates.size()) return false;
    Vector expected(2 * model.n);
    expected.head(model.n) = jac.iterates[2 * t - 1];
    expected.tail(model.n) = jac.iterates[2 * t];
    if ((y - expected).lpNorm<Eigen::Infinity>() > tol) return false;
  }
  return true;
}

// The directed-edge linear system M b = d satisfied by any fixed point of the
// mean updates once the variances have converged:
//   M_{ij,ij} = A*_{i\j}
//   M_{ij,ki} = c_ki gamma_ij / c_ij   for k in di \ {j}
//   M_{ij,ji} = (c_ij - 1) gamma_ij / c_ij
//   d_{ij}    = h_i gamma_ij / c_ij
// Rows and columns are indexed by the canonical directed-edge order of
// DirectedEdgeIndex.
struct MeanSystem {
  Matrix m;
  Vector d;
};

inline MeanSystem build_mean_system(const QuadraticModel& model, const DirectedEdgeIndex& idx,
                                    const EdgeParameters& c, const MessageState& fixed) {
  const int ne = idx.size();
  MeanSystem sys;
  sys.m = Matrix::Zero(ne, ne);
  sys.d = Vector::Zero(ne);
  for (int e = 0; e < ne; ++e)
    if (fixed.msg[e].unbounded)
      throw std::invalid_argument("build_mean_system: unbounded message in fixed point");
  for (int e = 0; e < ne; ++e) {
    const auto [i, j] = idx.edges[e];
    const double cij = c.at(idx, e);
    const double g = model.gamma(i, j) / cij;
    const LocalTerms t = local_terms(fixed, model, idx, c, i, j);
    sys.m(e, e) = t.curvature;  // A*_{i\j}
    for (int k : idx.neighbors[i]) {
      const int ki = idx.edge_id(k, i);
      if (k == j)
        sys.m(e, ki) = (cij - 1.0) * g;
      else
        sys.m(e, ki) = c.at(idx, ki) * g;
    }
    sys.d[e] = model.h[i] * g;
  }
  return sys;
}

// One asynchronous mean sweep of the engine against one Gauss-Seidel sweep on
// the mean system, both in the canonical directed-edge order and both started
// from the b's of `state` with the a's frozen. Returns the sup-norm gap via
// max_diff when requested.
inline bool mean_sweep_equivalence_check(const QuadraticModel& model,
                                         const DirectedEdgeIndex& idx, const EdgeParameters& c,
                                         const MessageState& state, double tol = 1e-12,
                                         double* max_diff = nullptr) {
  const MeanSystem sys = build_mean_system(model, idx, c, state);
  const int ne = idx.size();
  for (int e = 0; e < ne; ++e)
    if (!(sys.m(e, e) > 0.0)) return false;  // variances not converged to a usable point

  std::vector<int> order(model.n);
  std::iota(order.begin(), order.end(), 0);
  const MessageState swept = async_mean_sweep(state, model, idx, c, order);
  if (!swept.valid) return false;

  Vector b(ne);
  for (int e = 0; e < ne; ++e) b[e] = state.msg[e].b;
  for (int e = 0; e < ne; ++e) {
    double s = sys.d[e];
    for (int k = 0; k < ne; ++k)
      if (k != e) s -= sys.m(e, k) * b[k];
    b[e] = s / sys.m(e, e);
  }

  double diff = 0.0;
  for (int e = 0; e < ne; ++e) diff = std::max(diff, std::abs(b[e] - swept.msg[e].b));
  if (max_diff) *max_diff = diff;
  return diff <= tol;
}

}  // namespace quadbp
