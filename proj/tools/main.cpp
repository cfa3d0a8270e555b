// quadbp command line: solve quadratic minimization instances with reweighted
// Gaussian belief propagation, diagnose convergence certificates, sweep the
// reweighting parameter, and regenerate the bundled experiment artifacts.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "quadbp/quadbp.hpp"

namespace {

using namespace quadbp;

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitNoConvergence = 2;

struct InputOptions {
  std::string matrix_path;
  std::string h_path;
  std::string format = "auto";
  double p = 0.0;
  bool has_p = false;
};

void add_input_options(CLI::App* cmd, InputOptions& in) {
  auto* matrix = cmd->add_option("matrix", in.matrix_path, "matrix file (dense text or Matrix Market)");
  auto* p = cmd->add_option("--p", in.p, "use the built-in 4-node chorded-cycle family at this p instead of a file");
  cmd->add_option("--h-file", in.h_path, "linear term, one value per line (default: all ones)");
  cmd->add_option("--format", in.format, "matrix format: auto, dense, mm")
      ->check(CLI::IsMember({"auto", "dense", "mm"}));
  matrix->excludes(p);
  p->excludes(matrix);
}

QuadraticModel load_input(const CLI::App* cmd, const InputOptions& in) {
  if (cmd->count("--p")) {
    QuadraticModel m = gallery::chord4_model(in.p);
    if (!in.h_path.empty()) {
      Vector h = load_vector(in.h_path);
      if (h.size() != m.n) throw std::runtime_error(in.h_path + ": h dimension mismatch");
      m.h = h;
    }
    return m;
  }
  if (in.matrix_path.empty()) throw std::runtime_error("no input: pass a matrix file or --p");
  MatrixFormat fmt = MatrixFormat::dense_text;
  if (in.format == "auto")
    fmt = detect_format(in.matrix_path);
  else if (in.format == "mm")
    fmt = MatrixFormat::matrix_market;
  std::optional<std::string> h;
  if (!in.h_path.empty()) h = in.h_path;
  return load_model(in.matrix_path, fmt, h);
}

int require_valid(const QuadraticModel& model) {
  const auto violations = validate_model(model);
  if (violations.empty()) return kExitOk;
  for (const auto& v : violations) std::fprintf(stderr, "invalid model: %s\n", v.c_str());
  return kExitInputError;
}

int cmd_solve(const CLI::App* cmd, const InputOptions& in, double c_value,
              const std::string& schedule_name, double delta, double tol, int max_iter) {
  QuadraticModel model = load_input(cmd, in);
  if (int rc = require_valid(model)) return rc;
  const DirectedEdgeIndex idx = edge_set(model);
  const EdgeParameters c = make_parameters(idx, c_value);

  Schedule schedule = Schedule::synchronous();
  if (schedule_name == "async") schedule = Schedule::asynchronous();
  if (schedule_name == "damped") schedule = Schedule::damped(delta);

  const RunReport rep = run(model, idx, c, schedule, tol, max_iter);
  std::printf("nodes: %d, directed edges: %d\n", model.n, idx.size());
  std::printf("schedule: %s, c = %g, tol = %g, max iterations = %d\n", schedule_name.c_str(),
              c_value, tol, max_iter);
  std::printf("converged: %s (%d iterations)\n", rep.converged ? "yes" : "no", rep.iterations);
  std::printf("trees positive: %s, a monotone: %s\n", rep.trees_positive ? "yes" : "no",
              rep.a_monotone ? "yes" : "no");
  std::printf("%6s %22s %22s\n", "node", "mean", "variance");
  for (int i = 0; i < model.n; ++i) {
    if (std::isnan(rep.final_means[i]))
      std::printf("%6d %22s %22s\n", i, "(not decodable)", "-");
    else
      std::printf("%6d %22.12g %22.12g\n", i, rep.final_means[i], rep.final_variances[i]);
  }
  if (model.n <= 500 && rep.final_decodable) {
    try {
      const Vector truth = direct_solve(model);
      std::printf("error vs direct solve (2-norm): %.6g\n", (rep.final_means - truth).norm());
    } catch (const std::runtime_error&) {
      std::printf("error vs direct solve: unavailable (singular matrix)\n");
    }
  }
  return rep.converged ? kExitOk : kExitNoConvergence;
}

int cmd_diagnose(const CLI::App* cmd, const InputOptions& in, double r_max) {
  QuadraticModel model = load_input(cmd, in);
  if (int rc = require_valid(model)) return rc;
  const DirectedEdgeIndex idx = edge_set(model);

  std::printf("nodes: %d, undirected edges: %d, max degree: %d\n", model.n, idx.undirected_count,
              idx.max_degree());
  const EigenCheck pd = positive_definite_check(model);
  std::printf("positive definite: %s (lambda_min = %.10g)\n", pd.positive_definite ? "yes" : "no",
              pd.lambda_min);
  const WalkSummability ws = walk_summability(model);
  if (ws.indeterminate)
    std::printf("walk-summable: indeterminate (rho = %.10g)\n", ws.rho);
  else
    std::printf("walk-summable: %s (rho = %.10g)\n", ws.walk_summable ? "yes" : "no", ws.rho);
  if (auto w = sdd_witness(model)) {
    std::printf("sdd witness:");
    for (int i = 0; i < model.n; ++i) std::printf(" %.6g", (*w)[i]);
    std::printf("\n");
  } else {
    std::printf("sdd witness: none\n");
  }
  const CoveredModel adv = adversarial_two_cover(model);
  const EigenCheck adv_pd = positive_definite_check(adv.model.gamma);
  std::printf("adversarial 2-cover: lambda_min = %.10g (%spositive definite)\n", adv_pd.lambda_min,
              adv_pd.positive_definite ? "" : "not ");
  if (auto cert = find_uniform_r(model, idx, r_max))
    std::printf("uniform reweighting certificate: r = %g, s = %g (slack = %.6g)\n", cert->r,
                cert->s, cert->slack);
  else
    std::printf("uniform reweighting certificate: none up to r_max = %g\n", r_max);
  return kExitOk;
}

int cmd_sweep(const CLI::App* cmd, const InputOptions& in, double c_min, double c_max,
              double c_step, double tol, int max_iter, const std::string& out_path) {
  QuadraticModel model = load_input(cmd, in);
  if (int rc = require_valid(model)) return rc;
  if (!(c_step > 0.0) || !(c_min <= c_max)) {
    std::fprintf(stderr, "invalid grid: need c-min <= c-max and c-step > 0\n");
    return kExitInputError;
  }
  const DirectedEdgeIndex idx = edge_set(model);
  const auto records = sweep_c(model, idx, c_min, c_max, c_step, tol, max_iter);
  write_sweep_csv(out_path, records);
  int sync_ok = 0, async_ok = 0;
  for (const auto& r : records) {
    sync_ok += r.sync_iters.has_value();
    async_ok += r.async_iters.has_value();
  }
  std::printf("%zu grid points -> %s (sync converged at %d, async at %d)\n", records.size(),
              out_path.c_str(), sync_ok, async_ok);
  return kExitOk;
}

// Per-iteration 2-norm error of the mean estimates against the direct
// solution; disengaged entries (non-decodable beliefs or an unbounded state)
// are empty in the CSV.
std::vector<std::optional<double>> error_trace(const QuadraticModel& model,
                                               const DirectedEdgeIndex& idx,
                                               const EdgeParameters& c, const Schedule& schedule,
                                               const Vector& truth, int max_iter) {
  std::vector<std::optional<double>> out;
  MessageState st = initial_state(idx);
  std::vector<int> order(model.n);
  for (int i = 0; i < model.n; ++i) order[i] = i;
  for (int t = 0; t <= max_iter; ++t) {
    const BeliefSummary bel = beliefs(st, model, idx, c);
    if (bel.all_decodable)
      out.emplace_back((bel.mean - truth).norm());
    else
      out.emplace_back(std::nullopt);
    if (t > 0 && !st.valid) break;
    if (out.back() && *out.back() < 1e-10) break;
    switch (schedule.kind) {
      case Schedule::Kind::synchronous:
        st = sync_step(st, model, idx, c);
        break;
      case Schedule::Kind::asynchronous:
        st = async_sweep(st, model, idx, c, order);
        break;
      case Schedule::Kind::damped:
        st = damped_step(st, model, idx, c, schedule.delta);
        break;
    }
  }
  return out;
}

void write_error_curves(const std::string& path,
                        const std::vector<std::pair<std::string, std::vector<std::optional<double>>>>& curves) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << "iteration";
  std::size_t rows = 0;
  for (const auto& [name, data] : curves) {
    out << "," << name;
    rows = std::max(rows, data.size());
  }
  out << "\n";
  char buf[64];
  for (std::size_t t = 0; t < rows; ++t) {
    out << t;
    for (const auto& [name, data] : curves) {
      out << ",";
      if (t < data.size() && data[t]) {
        std::snprintf(buf, sizeof buf, "%.12g", *data[t]);
        out << buf;
      }
    }
    out << "\n";
  }
}

int cmd_reproduce(const std::string& target, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const auto in_dir = [&out_dir](const std::string& name) {
    return (fs::path(out_dir) / name).string();
  };

  if (target == "fig-chord") {
    for (double p : {0.3, 0.398, 0.4}) {
      QuadraticModel model = gallery::chord4_model(p);
      const DirectedEdgeIndex idx = edge_set(model);
      const Vector truth = direct_solve(model);
      const EdgeParameters c1 = make_parameters(idx, 1.0);
      const EdgeParameters c2 = make_parameters(idx, 2.0);
      std::vector<std::pair<std::string, std::vector<std::optional<double>>>> curves;
      curves.emplace_back("minsum", error_trace(model, idx, c1, Schedule::synchronous(), truth, 10000));
      curves.emplace_back("sync_c2", error_trace(model, idx, c2, Schedule::synchronous(), truth, 10000));
      curves.emplace_back("async_c2",
                          error_trace(model, idx, c2, Schedule::asynchronous(), truth, 10000));
      char name[64];
      std::snprintf(name, sizeof name, "chord_p%g.csv", p);
      const std::string path = in_dir(name);
      write_error_curves(path, curves);
      std::printf("wrote %s\n", path.c_str());
    }
    return kExitOk;
  }
  if (target == "fig-c") {
    QuadraticModel model = gallery::chord4_model(0.4);
    const DirectedEdgeIndex idx = edge_set(model);
    write_sweep_csv(in_dir("fig_c.csv"), sweep_c(model, idx, -3.0, 3.0, 0.1, 1e-6, 10000));
    std::printf("wrote %s\n", in_dir("fig_c.csv").c_str());
    return kExitOk;
  }
  if (target == "fig-rnd") {
    QuadraticModel model = gallery::rnd4_model();
    const DirectedEdgeIndex idx = edge_set(model);
    write_sweep_csv(in_dir("fig_rnd.csv"), sweep_c(model, idx, -5.0, 5.0, 0.1, 1e-6, 10000));
    std::printf("wrote %s\n", in_dir("fig_rnd.csv").c_str());
    return kExitOk;
  }
  if (target == "quadcover") {
    const QuadraticModel base = gallery::triangle06_model();
    const CoveredModel cover = gallery::triangle06_two_cover();
    write_dense_text(in_dir("triangle06.txt"), base.gamma);
    write_dense_text(in_dir("triangle06_cover.txt"), cover.model.gamma);
    std::printf("base matrix:\n");
    for (int i = 0; i < 3; ++i)
      std::printf("  %4.1f %4.1f %4.1f\n", base.gamma(i, 0), base.gamma(i, 1), base.gamma(i, 2));
    std::printf("2-cover:\n");
    for (int i = 0; i < 6; ++i) {
      std::printf(" ");
      for (int j = 0; j < 6; ++j) std::printf(" %4.1f", cover.model.gamma(i, j));
      std::printf("\n");
    }
    const EigenCheck base_pd = positive_definite_check(base);
    const EigenCheck cover_pd = positive_definite_check(cover.model.gamma);
    std::ofstream report(in_dir("report.txt"));
    report << "base lambda_min = " << base_pd.lambda_min << "\n";
    report << "cover lambda_min = " << cover_pd.lambda_min << "\n";
    report << "cover valid: " << (validate_cover(base, cover).valid ? "yes" : "no") << "\n";
    std::printf("base lambda_min = %.10g, cover lambda_min = %.10g\n", base_pd.lambda_min,
                cover_pd.lambda_min);
    std::printf("wrote %s, %s, %s\n", in_dir("triangle06.txt").c_str(),
                in_dir("triangle06_cover.txt").c_str(), in_dir("report.txt").c_str());
    return kExitOk;
  }
  std::fprintf(stderr, "unknown target '%s' (expected fig-chord, fig-c, fig-rnd, quadcover)\n",
               target.c_str());
  return kExitInputError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reweighted Gaussian belief propagation for quadratic minimization"};
  app.require_subcommand(1);

  InputOptions solve_in;
  double solve_c = 1.0, solve_delta = 0.5, solve_tol = 1e-6;
  int solve_max_iter = 10000;
  std::string solve_schedule = "sync";
  auto* solve = app.add_subcommand("solve", "run message passing and report means/variances");
  add_input_options(solve, solve_in);
  solve->add_option("--c", solve_c, "uniform reweighting parameter (nonzero)");
  solve->add_option("--schedule", solve_schedule, "update schedule")
      ->check(CLI::IsMember({"sync", "async", "damped"}));
  solve->add_option("--delta", solve_delta, "damping factor in (0,1) for --schedule damped");
  solve->add_option("--tol", solve_tol, "sup-norm tolerance on mean changes");
  solve->add_option("--max-iter", solve_max_iter, "iteration cap");

  InputOptions diag_in;
  double diag_r_max = 1048576.0;
  auto* diagnose = app.add_subcommand("diagnose", "convergence certificates and cover spectra");
  add_input_options(diagnose, diag_in);
  diagnose->add_option("--r-max", diag_r_max, "certificate search bound");

  InputOptions sweep_in;
  double c_min = -3.0, c_max = 3.0, c_step = 0.1, sweep_tol = 1e-6;
  int sweep_max_iter = 10000;
  std::string sweep_out = "sweep.csv";
  auto* sweep = app.add_subcommand("sweep-c", "iterations-to-convergence over a c grid (CSV)");
  add_input_options(sweep, sweep_in);
  sweep->add_option("--c-min", c_min, "grid start");
  sweep->add_option("--c-max", c_max, "grid end");
  sweep->add_option("--c-step", c_step, "grid step (positive)");
  sweep->add_option("--tol", sweep_tol, "convergence tolerance");
  sweep->add_option("--max-iter", sweep_max_iter, "iteration cap per grid point");
  sweep->add_option("--out", sweep_out, "output CSV path");

  std::string repro_target;
  std::string repro_out = "reproduce-out";
  auto* reproduce = app.add_subcommand("reproduce", "regenerate the bundled experiment artifacts");
  reproduce->add_option("target", repro_target, "fig-chord | fig-c | fig-rnd | quadcover")
      ->required();
  reproduce->add_option("--out", repro_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (solve->parsed())
      return cmd_solve(solve, solve_in, solve_c, solve_schedule, solve_delta, solve_tol,
                       solve_max_iter);
    if (diagnose->parsed()) return cmd_diagnose(diagnose, diag_in, diag_r_max);
    if (sweep->parsed())
      return cmd_sweep(sweep, sweep_in, c_min, c_max, c_step, sweep_tol, sweep_max_iter,
                       sweep_out);
    if (reproduce->parsed()) return cmd_reproduce(repro_target, repro_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInputError;
  }
  return kExitInputError;
}
