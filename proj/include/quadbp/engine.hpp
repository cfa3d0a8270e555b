#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "quadbp/model.hpp"

namespace quadbp {

// A quadratic message m_{i->j}(x) = 1/2 a x^2 + b x, tracked by its two
// coefficients. `unbounded` is a distinct sentinel (the minimization producing
// the message was unbounded below, a = -inf); it is never encoded as an IEEE
// infinity because that would silently corrupt b.
struct Message {
  double a = 0.0;
  double b = 0.0;
  bool unbounded = false;
};

// Message vector indexed by directed edge. The initial state is a = b = 0 on
// every edge; `valid` drops to false permanently once any message goes
// unbounded.
struct MessageState {
  std::vector<Message> msg;
  int iteration = 0;
  bool valid = true;
};

inline MessageState initial_state(const DirectedEdgeIndex& idx) {
  MessageState s;
  s.msg.resize(idx.size());
  return s;
}

// Coefficients of the local subproblem minimized when sending i->j:
//   curvature A_{i\j} = gamma_ii + sum_{k in di\j} c_ki a_{k->i} + (c_ij - 1) a_{j->i}
//   linear    B_{i\j} = h_i     - sum_{k in di\j} c_ki b_{k->i} - (c_ij - 1) b_{j->i}
// The linear term's sign is fixed so that the mean estimate comes out as B/A;
// see beliefs() below.
struct LocalTerms {
  double curvature = 0.0;
  double linear = 0.0;
  bool unbounded = false;
};

// Contributions with an exactly zero coefficient are dropped before touching
// the message, so an unbounded reverse message does not poison the cavity
// when c_ij == 1.
inline LocalTerms local_terms(const MessageState& state, const QuadraticModel& model,
                              const DirectedEdgeIndex& idx, const EdgeParameters& c,
                              int i, int j) {
  LocalTerms t;
  t.curvature = model.gamma(i, i);
  t.linear = model.h(i);
  for (int k : idx.neighbors[i]) {
    const int e = idx.edge_id(k, i);
    const double cki = c.at(idx, e);
    const double w = (k == j) ? cki - 1.0 : cki;
    if (w == 0.0) continue;
    const Message& m = state.msg[e];
    if (m.unbounded) {
      t.unbounded = true;
      return t;
    }
    t.curvature += w * m.a;
    t.linear -= w * m.b;
  }
  return t;
}

// Closed-form minimization of the local subproblem over x_i:
//   a_{i->j} = -(gamma_ij/c_ij)^2 / A_{i\j}
//   b_{i->j} =  B_{i\j} (gamma_ij/c_ij) / A_{i\j}
// Only valid when A_{i\j} > 0; otherwise the minimum is -inf and the message
// is flagged unbounded.
inline Message send_message(const LocalTerms& local, double gamma_ij, double c_ij) {
  Message out;
  if (local.unbounded || !(local.curvature > 0.0)) {
    out.unbounded = true;
    return out;
  }
  const double g = gamma_ij / c_ij;
  out.a = -(g * g) / local.curvature;
  out.b = local.linear * g / local.curvature;
  return out;
}

// One synchronous step: every directed edge updated from the previous state.
// Pure function of its input; an invalid state is returned frozen.
inline MessageState sync_step(const MessageState& state, const QuadraticModel& model,
                              const DirectedEdgeIndex& idx, const EdgeParameters& c) {
  MessageState next = state;
  next.iteration = state.iteration + 1;
  if (!state.valid) return next;
  for (int e = 0; e < idx.size(); ++e) {
    const auto [i, j] = idx.edges[e];
    next.msg[e] = send_message(local_terms(state, model, idx, c, i, j), model.gamma(i, j),
                               c.at(idx, e));
    if (next.msg[e].unbounded) next.valid = false;
  }
  return next;
}

// One asynchronous sweep: for each destination j in `order`, the messages
// i->j for every i in dj are recomputed from current values, so later updates
// within the sweep see earlier ones. `order` is usually a permutation of the
// nodes; any node sequence is accepted (only the listed destinations are
// visited).
inline MessageState async_sweep(const MessageState& state, const QuadraticModel& model,
                                const DirectedEdgeIndex& idx, const EdgeParameters& c,
                                std::span<const int> order) {
  MessageState cur = state;
  cur.iteration = state.iteration + 1;
  if (!state.valid) return cur;
  for (int j : order) {
    for (int e = idx.dst_offset[j]; e < idx.dst_offset[j + 1]; ++e) {
      const int i = idx.edges[e].src;
      cur.msg[e] = send_message(local_terms(cur, model, idx, c, i, j), model.gamma(i, j),
                                c.at(idx, e));
      if (cur.msg[e].unbounded) cur.valid = false;
    }
  }
  return cur;
}

// Damped synchronous step: coefficientwise delta*old + (1-delta)*sync update.
// Unbounded in either operand yields unbounded.
inline MessageState damped_step(const MessageState& state, const QuadraticModel& model,
                                const DirectedEdgeIndex& idx, const EdgeParameters& c,
                                double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("damped_step: delta must lie in (0,1)");
  MessageState undamped = sync_step(state, model, idx, c);
  if (!state.valid) return undamped;
  MessageState next = undamped;
  for (std::size_t e = 0; e < next.msg.size(); ++e) {
    const Message& o = state.msg[e];
    const Message& u = undamped.msg[e];
    if (o.unbounded || u.unbounded) {
      next.msg[e] = Message{0.0, 0.0, true};
      next.valid = false;
    } else {
      next.msg[e] = Message{delta * o.a + (1.0 - delta) * u.a,
                            delta * o.b + (1.0 - delta) * u.b, false};
    }
  }
  return next;
}

// Per-node belief coefficients:
//   A_i = gamma_ii + sum_{k in di} c_ki a_{k->i}
//   B_i = h_i      - sum_{k in di} c_ki b_{k->i}
// mean_i = B_i/A_i and variance_i = 1/A_i are defined only when A_i > 0
// (locally decodable node); others carry NaN.
struct BeliefSummary {
  Vector curvature;
  Vector linear;
  Vector mean;
  Vector variance;
  std::vector<bool> decodable;
  bool all_decodable = true;
};

inline BeliefSummary beliefs(const MessageState& state, const QuadraticModel& model,
                             const DirectedEdgeIndex& idx, const EdgeParameters& c) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  BeliefSummary out;
  out.curvature = Vector::Zero(model.n);
  out.linear = Vector::Zero(model.n);
  out.mean = Vector::Constant(model.n, nan);
  out.variance = Vector::Constant(model.n, nan);
  out.decodable.assign(model.n, false);
  for (int i = 0; i < model.n; ++i) {
    double a = model.gamma(i, i);
    double b = model.h(i);
    bool unbounded = false;
    for (int k : idx.neighbors[i]) {
      const int e = idx.edge_id(k, i);
      const double w = c.at(idx, e);
      if (w == 0.0) continue;
      const Message& m = state.msg[e];
      if (m.unbounded) {
        unbounded = true;
        break;
      }
      a += w * m.a;
      b -= w * m.b;
    }
    if (unbounded) {
      out.curvature[i] = -std::numeric_limits<double>::infinity();
      out.linear[i] = nan;
      out.all_decodable = false;
      continue;
    }
    out.curvature[i] = a;
    out.linear[i] = b;
    if (a > 0.0) {
      out.decodable[i] = true;
      out.mean[i] = b / a;
      out.variance[i] = 1.0 / a;
    } else {
      out.all_decodable = false;
    }
  }
  return out;
}

// Update schedule for run().
struct Schedule {
  enum class Kind { synchronous, asynchronous, damped };

  Kind kind = Kind::synchronous;
  std::vector<int> order;  // asynchronous only; empty means ascending node ids
  double delta = 0.5;      // damped only; must lie in (0,1)

  static Schedule synchronous() { return {}; }
  static Schedule asynchronous(std::vector<int> order = {}) {
    Schedule s;
    s.kind = Kind::asynchronous;
    s.order = std::move(order);
    return s;
  }
  static Schedule damped(double delta = 0.5) {
    Schedule s;
    s.kind = Kind::damped;
    s.delta = delta;
    return s;
  }
};

// Iteration trace of a run. Convergence is measured on the sup-norm change of
// the mean-estimate vector; the message residual (sup-norm change of the
// (a, b) coefficients) is recorded as a secondary signal.
struct RunReport {
  int iterations = 0;
  bool converged = false;
  std::vector<double> residual_history;
  std::vector<double> message_residual_history;
  bool a_monotone = true;
  bool trees_positive = true;
  Vector final_means;
  Vector final_variances;
  bool final_decodable = false;
  bool state_valid = true;
  MessageState final_state;
};

namespace detail {

inline double mean_change(const BeliefSummary& prev, const BeliefSummary& cur) {
  if (!prev.all_decodable || !cur.all_decodable)
    return std::numeric_limits<double>::infinity();
  return (cur.mean - prev.mean).lpNorm<Eigen::Infinity>();
}

inline double message_change(const MessageState& prev, const MessageState& cur) {
  double r = 0.0;
  for (std::size_t e = 0; e < cur.msg.size(); ++e) {
    if (prev.msg[e].unbounded || cur.msg[e].unbounded)
      return std::numeric_limits<double>::infinity();
    r = std::max(r, std::abs(cur.msg[e].a - prev.msg[e].a));
    r = std::max(r, std::abs(cur.msg[e].b - prev.msg[e].b));
  }
  return r;
}

// a^t <= a^{t-1} entrywise, exact; unbounded counts as -inf.
inline bool a_decreased(const MessageState& prev, const MessageState& cur) {
  for (std::size_t e = 0; e < cur.msg.size(); ++e) {
    if (cur.msg[e].unbounded) continue;
    if (prev.msg[e].unbounded) return false;
    if (!(cur.msg[e].a <= prev.msg[e].a)) return false;
  }
  return true;
}

}  // namespace detail

// Iterates the chosen schedule until the mean estimates move by at most tol
// in sup norm, max_iter is exhausted, or the state goes unbounded.
// Non-convergence is reported in the trace, never thrown.
inline RunReport run(const QuadraticModel& model, const DirectedEdgeIndex& idx,
                     const EdgeParameters& c, const Schedule& schedule, double tol,
                     int max_iter) {
  if (!(tol > 0.0)) throw std::invalid_argument("run: tol must be positive");
  if (max_iter < 1) throw std::invalid_argument("run: max_iter must be >= 1");
  std::vector<int> order;
  if (schedule.kind == Schedule::Kind::asynchronous) {
    order = schedule.order;
    if (order.empty()) {
      order.resize(model.n);
      std::iota(order.begin(), order.end(), 0);
    } else {
      std::vector<bool> seen(model.n, false);
      if (static_cast<int>(order.size()) != model.n)
        throw std::invalid_argument("run: order must be a permutation of the nodes");
      for (int v : order) {
        if (v < 0 || v >= model.n || seen[v])
          throw std::invalid_argument("run: order must be a permutation of the nodes");
        seen[v] = true;
      }
    }
  }

  RunReport report;
  MessageState state = initial_state(idx);
  BeliefSummary bel = beliefs(state, model, idx, c);
  for (int t = 1; t <= max_iter; ++t) {
    MessageState next;
    switch (schedule.kind) {
      case Schedule::Kind::synchronous:
        next = sync_step(state, model, idx, c);
        break;
      case Schedule::Kind::asynchronous:
        next = async_sweep(state, model, idx, c, order);
        break;
      case Schedule::Kind::damped:
        next = damped_step(state, model, idx, c, schedule.delta);
        break;
    }
    BeliefSummary next_bel = beliefs(next, model, idx, c);
    if (!detail::a_decreased(state, next)) report.a_monotone = false;
    const double mean_resid = detail::mean_change(bel, next_bel);
    const double msg_resid = detail::message_change(state, next);
    report.residual_history.push_back(mean_resid);
    report.message_residual_history.push_back(msg_resid);
    report.iterations = t;
    state = std::move(next);
    bel = std::move(next_bel);
    if (!state.valid) break;
    if (mean_resid <= tol) {
      report.converged = true;
      break;
    }
  }
  report.trees_positive = state.valid;
  report.state_valid = state.valid;
  report.final_means = bel.mean;
  report.final_variances = bel.variance;
  report.final_decodable = bel.all_decodable;
  report.final_state = std::move(state);
  return report;
}

// Asynchronous sweep over the mean coefficients only: every a is held fixed
// and each b_{i->j} is recomputed in order from current values. With the a's
// at a fixed point this is one Gauss-Seidel sweep of the directed-edge mean
// system (see solvers.hpp).
inline MessageState async_mean_sweep(const MessageState& state, const QuadraticModel& model,
                                     const DirectedEdgeIndex& idx, const EdgeParameters& c,
                                     std::span<const int> order) {
  MessageState cur = state;
  cur.iteration = state.iteration + 1;
  if (!state.valid) return cur;
  for (int j : order) {
    for (int e = idx.dst_offset[j]; e < idx.dst_offset[j + 1]; ++e) {
      const int i = idx.edges[e].src;
      const LocalTerms t = local_terms(cur, model, idx, c, i, j);
      const Message m = send_message(t, model.gamma(i, j), c.at(idx, e));
      if (m.unbounded) {
        cur.valid = false;
        continue;
      }
      cur.msg[e].b = m.b;
    }
  }
  return cur;
}

// Coefficients of the pairwise belief
//   tau_ij(x_i, x_j) = 1/2 A_{i\j} x_i^2 + 1/2 A_{j\i} x_j^2
//                      + (gamma_ij/c_ij) x_i x_j - B_{i\j} x_i - B_{j\i} x_j.
struct PairwiseBelief {
  double curvature_i = 0.0;
  double curvature_j = 0.0;
  double cross = 0.0;
  double linear_i = 0.0;
  double linear_j = 0.0;
  bool unbounded = false;
};

inline PairwiseBelief pairwise_belief(const MessageState& state, const QuadraticModel& model,
                                      const DirectedEdgeIndex& idx, const EdgeParameters& c,
                                      int i, int j) {
  const LocalTerms ti = local_terms(state, model, idx, c, i, j);
  const LocalTerms tj = local_terms(state, model, idx, c, j, i);
  PairwiseBelief out;
  if (ti.unbounded || tj.unbounded) {
    out.unbounded = true;
    return out;
  }
  out.curvature_i = ti.curvature;
  out.curvature_j = tj.curvature;
  out.cross = model.gamma(i, j) / c.at_pair(idx, i, j);
  out.linear_i = ti.linear;
  out.linear_j = tj.linear;
  return out;
}

// Reassembles the objective from the beliefs of an arbitrary message state:
//   sum_i tau_i + sum_{(i,j)} c_ij (tau_ij - tau_i - tau_j)
// equals 1/2 x^T gamma x - h^T x up to an additive constant, for every state
// and every parameter vector. Returns the reconstructed (gamma, h).
inline std::pair<Matrix, Vector> reconstruct_objective(const MessageState& state,
                                                       const QuadraticModel& model,
                                                       const DirectedEdgeIndex& idx,
                                                       const EdgeParameters& c) {
  const BeliefSummary bel = beliefs(state, model, idx, c);
  Matrix g = Matrix::Zero(model.n, model.n);
  Vector h = Vector::Zero(model.n);
  for (int i = 0; i < model.n; ++i) {
    g(i, i) = bel.curvature[i];
    h[i] = bel.linear[i];
  }
  for (int i = 0; i < model.n; ++i) {
    for (int j : idx.neighbors[i]) {
      if (i > j) continue;
      const double cij = c.at_pair(idx, i, j);
      const PairwiseBelief pb = pairwise_belief(state, model, idx, c, i, j);
      if (pb.unbounded) throw std::invalid_argument("reconstruct_objective: unbounded belief");
      // tau_ij - tau_i - tau_j, weighted by c_ij.
      g(i, i) += cij * (pb.curvature_i - bel.curvature[i]);
      g(j, j) += cij * (pb.curvature_j - bel.curvature[j]);
      g(i, j) += cij * pb.cross;
      g(j, i) += cij * pb.cross;
      h[i] += cij * (pb.linear_i - bel.linear[i]);
      h[j] += cij * (pb.linear_j - bel.linear[j]);
    }
  }
  return {std::move(g), std::move(h)};
}

}  // namespace quadbp
