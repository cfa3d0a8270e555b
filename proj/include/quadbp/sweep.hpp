#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "quadbp/engine.hpp"
#include "quadbp/model.hpp"

namespace quadbp {

// One grid point of a reweighting sweep: iterations to convergence for the
// synchronous and asynchronous schedules, or nothing when the schedule did
// not converge within the iteration cap.
struct SweepRecord {
  double c = 0.0;
  std::optional<int> sync_iters;
  std::optional<int> async_iters;
};

// Runs both schedules over the uniform-c grid c_min, c_min + step, ...,
// c_max. Grid points at c == 0 (within 1e-9) are skipped: the update divides
// by c. Deterministic for fixed arguments.
inline std::vector<SweepRecord> sweep_c(const QuadraticModel& model, const DirectedEdgeIndex& idx,
                                        double c_min, double c_max, double c_step, double tol,
                                        int max_iter) {
  if (!(c_step > 0.0) || !(c_min <= c_max))
    throw std::invalid_argument("sweep_c: invalid grid");
  std::vector<SweepRecord> out;
  for (int k = 0;; ++k) {
    const double c = c_min + k * c_step;
    if (c > c_max + 0.5 * c_step) break;
    if (std::abs(c) < 1e-9) continue;
    const EdgeParameters params = make_parameters(idx, c);
    SweepRecord rec;
    rec.c = c;
    const RunReport sync = run(model, idx, params, Schedule::synchronous(), tol, max_iter);
    if (sync.converged) rec.sync_iters = sync.iterations;
    const RunReport async = run(model, idx, params, Schedule::asynchronous(), tol, max_iter);
    if (async.converged) rec.async_iters = async.iterations;
    out.push_back(rec);
  }
  return out;
}

// CSV with the fixed header "c,sync_iters,async_iters"; non-convergence is an
// empty field so plotting tools render a gap.
inline void write_sweep_csv(const std::string& path, const std::vector<SweepRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << "c,sync_iters,async_iters\n";
  char buf[64];
  for (const SweepRecord& rec : records) {
    std::snprintf(buf, sizeof buf, "%.12g", rec.c);
    out << buf << ",";
    if (rec.sync_iters) out << *rec.sync_iters;
    out << ",";
    if (rec.async_iters) out << *rec.async_iters;
    out << "\n";
  }
}

}  // namespace quadbp
