// Command-line front end: condense, solve, bench, closed-loop.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hyqp/bench_harness.hpp"
#include "hyqp/io.hpp"

namespace {

using namespace hyqp;

struct CondenseArgs {
  std::string model;
  std::string state;
  std::string out;
};

struct SolveArgs {
  std::string qp;
  std::string state;
  std::string solver = "hybrid";
  std::string init = "lambda-one";
  double eps = 1e-6;
  double eta_d = 0;
  double ldh = 0;
  int max_iters = 200;
  int dfg_max_iters = 50000;
  bool objective_merit = false;
  std::string trace;
  std::string report;
  std::string certificate;
};

struct BenchArgs {
  std::string suite = "planar";
  std::vector<int> scenarios{1, 2, 3, 4};
  double eps = 1e-6;
  int reps = 11;
  std::string out_dir = "results";
  bool timing_strict = false;
  int dfg_max_iters = 50000;
};

struct LoopArgs {
  std::string suite = "planar";
  int scenario = 3;
  int steps = 50;
  std::string state;
  std::string out;
};

// "<dir>/<stem>.<tag>.csv" next to the requested trace path.
std::string TracePath(const std::string& path, const std::string& tag) {
  std::filesystem::path p(path);
  return (p.parent_path() / (p.stem().string() + "." + tag + ".csv")).string();
}

std::ofstream OpenOut(const std::string& path) {
  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

void WriteFile(const std::string& path, const std::string& text) {
  std::ofstream out = OpenOut(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

int RunCondense(const CondenseArgs& a) {
  const io::ModelFile mf = io::ModelFromJson(io::ReadJsonFile(a.model));
  const VectorXd x0 = io::StateFromJson(io::ReadJsonFile(a.state));
  const CondensedMpc c = Condense(mf.model, mf.config);
  if (x0.size() != c.qp.n_x()) {
    throw std::runtime_error("state has " + std::to_string(x0.size()) + " entries, model has " +
                             std::to_string(c.qp.n_x()));
  }
  if (const auto bad = c.ViolatedConstantRow(x0)) {
    std::fprintf(stderr, "warning: x0 violates a bound on %s at stage %d; QP is infeasible\n",
                 ToString(bad->signal), bad->stage);
  }
  io::WriteJsonFile(a.out, io::QpToJson(c.qp, x0));
  std::printf("n = %lld, m = %lld, n_x = %lld, dropped constant rows = %zu\n",
              static_cast<long long>(c.qp.n()), static_cast<long long>(c.qp.m()),
              static_cast<long long>(c.qp.n_x()), c.constant_rows.size());
  return 0;
}

int RunSolve(const SolveArgs& a) {
  io::QpFile f = io::QpFromJson(io::ReadJsonFile(a.qp));
  VectorXd x;
  if (!a.state.empty()) {
    x = io::StateFromJson(io::ReadJsonFile(a.state));
  } else if (f.x_t) {
    x = *f.x_t;
  } else if (f.qp.n_x() == 0) {
    x = VectorXd(0);
  } else {
    throw std::runtime_error("no state: pass --state or add x_t to the problem file");
  }
  auto problem = std::make_shared<const Problem>(std::move(f.qp));
  const QpInstance inst(problem, x);

  PdipConfig cfg;
  cfg.epsilon = a.eps;
  cfg.max_iters = a.max_iters;
  if (a.objective_merit) cfg.merit = MeritRule::kObjective;
  ValidatePdipConfig(cfg);

  const bool need_eta = a.solver == "hybrid";
  std::optional<DualConstants> consts;
  if (a.solver != "pdip" || a.eta_d > 0 || a.ldh > 0) {
    if (need_eta && a.eta_d <= 0 && a.ldh <= 0) {
      throw std::runtime_error("the hybrid solver needs --eta-d or --ldh");
    }
    DualConstants c = ComputeDualConstants(*problem, a.ldh > 0 ? a.ldh : 1.0);
    if (a.eta_d > 0) {
      c.eta_d = a.eta_d;
      c.L_dH = c.m_d * c.m_d / a.eta_d;
    } else if (a.ldh <= 0) {
      c.L_dH = 0;
      c.eta_d = 0;
    }
    consts = c;
  }

  SolveReport report;
  VectorXd z;
  std::optional<SwitchCertificate> cert;
  if (a.solver == "hybrid") {
    HybridResult r = HybridSolve(inst, *consts, cfg, HybridCaps{a.dfg_max_iters, true});
    report = std::move(r.report);
    z = std::move(r.z);
    cert = std::move(r.certificate);
  } else if (a.solver == "pdip") {
    const double level = a.init == "lambda-small" ? 1e-6 : 1.0;
    const PdipResult r =
        RunPdip(inst, WarmStartPoint(inst, level), cfg, PdipOptions{false, true});
    report = MakeReport(inst, consts ? &*consts : nullptr, r);
    z = r.point.z;
  } else {
    const DfgResult r = RunDfg(inst, *consts, VectorXd::Zero(inst.m()),
                               DfgStopRule{DfgStopKind::kGap, a.eps, a.dfg_max_iters});
    report = MakeReport(inst, *consts, r);
    z = r.z;
  }

  if (!a.trace.empty()) {
    if (a.solver == "hybrid") {
      std::ofstream d = OpenOut(TracePath(a.trace, "dfg"));
      io::WriteDfgTrace(d, report.phase1_trace);
      std::ofstream p = OpenOut(TracePath(a.trace, "pdip"));
      io::WritePdipTrace(p, report.phase2_trace);
    } else {
      std::ofstream out = OpenOut(a.trace);
      if (a.solver == "pdip") {
        io::WritePdipTrace(out, report.phase2_trace);
      } else {
        io::WriteDfgTrace(out, report.phase1_trace);
      }
    }
  }
  if (!a.report.empty()) {
    io::WriteJsonFile(a.report, io::ReportToJson(report));
  }
  if (!a.certificate.empty() && cert) {
    io::WriteJsonFile(a.certificate, io::CertificateToJson(*cert));
  }

  std::printf("termination: %s\n", ToString(report.termination));
  std::printf("dfg iterations: %d, damped: %d, pure: %d\n", report.phase1_iters,
              report.damped_iters, report.pure_iters);
  std::printf("objective: %s\ninfeasibility: %s\n", io::FormatDouble(report.final_obj).c_str(),
              io::FormatDouble(report.infeasibility).c_str());
  if (consts && consts->eta_d > 0) {
    std::printf("L_d = %.6g, m_d = %.6g, eta_d = %.6g\n", consts->L_d, consts->m_d,
                consts->eta_d);
  }
  std::ostringstream zs;
  zs << "z:";
  for (Index i = 0; i < z.size(); ++i) zs << ' ' << io::FormatDouble(z[i]);
  std::printf("%s\n", zs.str().c_str());
  return report.termination == Termination::kConverged ? 0 : 3;
}

BenchmarkSuite SuiteByName(const std::string& name) {
  if (name == "planar") return PlanarBenchmark();
  if (name == "cessna") return CessnaBenchmark();
  throw std::runtime_error("unknown suite " + name);
}

int RunBench(const BenchArgs& a) {
  BenchmarkSuite suite = SuiteByName(a.suite);
  suite.repetitions = a.reps;
  const PreparedSuite prepared = Prepare(std::move(suite));
  RunOptions opts;
  opts.pdip.epsilon = a.eps;
  opts.repetitions = a.reps;
  opts.timing_strict = a.timing_strict;
  opts.dfg_max_iters = a.dfg_max_iters;
  const SweepResult sweep = RunScenarios(prepared, a.scenarios, opts);
  WriteSweep(prepared, sweep, a.out_dir);

  const DualConstants& c = prepared.constants;
  std::printf("suite %s: n = %lld, m = %lld, %zu states\n", prepared.suite.name.c_str(),
              static_cast<long long>(prepared.problem->n()),
              static_cast<long long>(prepared.problem->m()),
              prepared.suite.initial_states.size());
  std::printf("L_d = %.6g, m_d = %.6g, M_d = %.6g, L_dH = %.6g, eta_d = %.6g\n", c.L_d, c.m_d,
              c.M_d, c.L_dH, c.eta_d);
  std::printf("%-9s %6s %10s %8s %8s %10s %10s %10s %10s\n", "scenario", "conv", "dfg_avg",
              "damped", "pure", "best_s", "worst_s", "avg_s", "dev_s");
  for (const ScenarioSummary& s : sweep.summaries) {
    std::printf("%-9d %3d/%-2d %10.1f %8.2f %8.2f %10.3g %10.3g %10.3g %10.3g\n", s.scenario,
                s.converged, s.cells, s.dfg_iters_avg, s.damped_avg, s.pure_avg, s.best_seconds,
                s.worst_seconds, s.average_seconds, s.average_deviation);
  }
  for (const StructuralCheck& chk : sweep.checks) {
    std::printf("[%s] %s: %s\n", chk.passed ? "ok" : "FAIL", chk.name.c_str(),
                chk.detail.c_str());
  }
  return sweep.AllChecksPassed() ? 0 : 2;
}

int RunLoop(const LoopArgs& a) {
  const PreparedSuite prepared = Prepare(SuiteByName(a.suite));
  VectorXd x0 = prepared.suite.initial_states.front();
  if (!a.state.empty()) x0 = io::StateFromJson(io::ReadJsonFile(a.state));
  const ClosedLoopLog log = ClosedLoop(prepared, a.scenario, x0, a.steps);
  std::ostringstream csv;
  csv << "t";
  for (Index i = 0; i < x0.size(); ++i) csv << ",x" << i;
  csv << ",u0,dfg_iters,newton_iters,termination,solve_s\n";
  for (const ClosedLoopStep& s : log.steps) {
    csv << s.t;
    for (Index i = 0; i < s.x.size(); ++i) csv << ',' << io::FormatDouble(s.x[i]);
    csv << ',' << io::FormatDouble(s.u[0]) << ',' << s.dfg_iters << ',' << s.newton_iters << ','
        << ToString(s.termination) << ',' << io::FormatDouble(s.solve_seconds) << '\n';
  }
  if (a.out.empty()) {
    std::cout << csv.str();
  } else {
    WriteFile(a.out, csv.str());
  }
  std::fprintf(stderr, "%s after %zu steps; inputs within bounds: %s\n", log.status.c_str(),
               log.steps.size(), log.inputs_within_bounds ? "yes" : "no");
  return log.completed && log.inputs_within_bounds ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dense QP solvers for condensed linear MPC"};
  app.require_subcommand(1);

  CondenseArgs ca;
  auto* condense = app.add_subcommand("condense", "Build the condensed QP for a model and state");
  condense->add_option("--model", ca.model, "model JSON")->required()->check(CLI::ExistingFile);
  condense->add_option("--state", ca.state, "initial state JSON")
      ->required()
      ->check(CLI::ExistingFile);
  condense->add_option("--out", ca.out, "output problem JSON")->required();

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Solve a problem file");
  solve->add_option("--qp", sa.qp, "problem JSON")->required()->check(CLI::ExistingFile);
  solve->add_option("--state", sa.state, "state JSON (overrides x_t)")
      ->check(CLI::ExistingFile);
  solve->add_option("--solver", sa.solver, "dfg, pdip or hybrid")
      ->check(CLI::IsMember({"dfg", "pdip", "hybrid"}))
      ->capture_default_str();
  solve->add_option("--init", sa.init, "pdip start: lambda-one or lambda-small")
      ->check(CLI::IsMember({"lambda-one", "lambda-small"}))
      ->capture_default_str();
  solve->add_option("--eps", sa.eps, "tolerance on mu (dfg: on the gap)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  auto* eta = solve->add_option("--eta-d", sa.eta_d, "switch threshold")
                  ->check(CLI::PositiveNumber);
  auto* ldh = solve->add_option("--ldh", sa.ldh, "dual Hessian Lipschitz constant")
                  ->check(CLI::PositiveNumber);
  eta->excludes(ldh);
  solve->add_option("--max-iters", sa.max_iters, "interior-point iteration cap")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  solve->add_option("--dfg-max-iters", sa.dfg_max_iters, "dual gradient iteration cap")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  solve->add_flag("--objective-merit", sa.objective_merit,
                  "Armijo test on the objective instead of the residual norm");
  solve->add_option("--trace", sa.trace,
                    "trace CSV; hybrid writes <stem>.dfg.csv and <stem>.pdip.csv");
  solve->add_option("--report", sa.report, "report JSON");
  solve->add_option("--certificate", sa.certificate, "hybrid switch certificate JSON");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Run a benchmark suite");
  bench->add_option("--suite", ba.suite, "planar or cessna")
      ->check(CLI::IsMember({"planar", "cessna"}))
      ->capture_default_str();
  bench->add_option("--scenarios", ba.scenarios, "comma-separated scenario ids")
      ->delimiter(',')
      ->check(CLI::Range(1, 4));
  bench->add_option("--eps", ba.eps, "tolerance on mu")->check(CLI::PositiveNumber);
  bench->add_option("--reps", ba.reps, "timed repetitions per cell (odd)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--out-dir", ba.out_dir, "output directory")->capture_default_str();
  bench->add_flag("--timing-strict", ba.timing_strict, "run cells sequentially");
  bench->add_option("--dfg-max-iters", ba.dfg_max_iters, "dual gradient iteration cap")
      ->check(CLI::PositiveNumber);

  LoopArgs la;
  auto* loop = app.add_subcommand("closed-loop", "Simulate the regulator on a suite plant");
  loop->add_option("--suite", la.suite, "planar or cessna")
      ->check(CLI::IsMember({"planar", "cessna"}))
      ->capture_default_str();
  loop->add_option("--scenario", la.scenario, "solver scenario, 0 for the reference solver")
      ->check(CLI::Range(0, 4))
      ->capture_default_str();
  loop->add_option("--steps", la.steps, "simulation steps")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  loop->add_option("--state", la.state, "initial state JSON (default: first suite state)")
      ->check(CLI::ExistingFile);
  loop->add_option("--out", la.out, "trajectory CSV (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*condense) return RunCondense(ca);
    if (*solve) return RunSolve(sa);
    if (*bench) {
      if (ba.reps % 2 == 0) throw std::runtime_error("--reps must be odd");
      return RunBench(ba);
    }
    if (*loop) return RunLoop(la);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
