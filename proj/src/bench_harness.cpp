#include "hyqp/bench_harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>
#include <thread>

#include <unsupported/Eigen/MatrixFunctions>

#include "hyqp/io.hpp"

namespace hyqp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kObjectiveTol = 1e-5;
constexpr double kFeasTol = 1e-6;
constexpr int kMaxPureIters = 15;

// A premature-switch flag is a diagnostic; the run still met the tolerance.
bool ReachedTolerance(Termination t) {
  return t == Termination::kConverged || t == Termination::kSwitchPremature;
}

double Seconds(std::chrono::steady_clock::duration d) {
  return std::chrono::duration<double>(d).count();
}

double Median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

double StdDev(const std::vector<double>& v) {
  if (v.size() < 2) return 0;
  double mean = 0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double acc = 0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

struct RunOutcome {
  VectorXd z;
  SolveReport report;
};

RunOutcome RunOnce(const PreparedSuite& prepared, const QpInstance& inst, const Scenario& sc,
                   const RunOptions& options, bool record_trace) {
  RunOutcome out;
  switch (sc.init_rule) {
    case InitRule::kLsWarmLambdaOne:
    case InitRule::kLsWarmLambdaSmall: {
      const double level = sc.init_rule == InitRule::kLsWarmLambdaOne ? 1.0 : 1e-6;
      const PdipResult r = RunPdip(inst, WarmStartPoint(inst, level), options.pdip,
                                   PdipOptions{false, record_trace});
      out.z = r.point.z;
      out.report = MakeReport(inst, &prepared.constants, r);
      break;
    }
    case InitRule::kHybridDefault: {
      HybridResult r =
          HybridSolve(inst, prepared.constants, options.pdip,
                      HybridCaps{options.dfg_max_iters, record_trace});
      out.z = std::move(r.z);
      out.report = std::move(r.report);
      break;
    }
    case InitRule::kDfgOnly: {
      const DfgStopRule rule{DfgStopKind::kGap, options.pdip.epsilon, options.dfg_max_iters};
      const DfgResult r = RunDfg(inst, prepared.constants, VectorXd::Zero(inst.m()), rule,
                                 DfgOptions{record_trace});
      out.z = r.z;
      out.report = MakeReport(inst, prepared.constants, r);
      break;
    }
  }
  return out;
}

void Summarize(SweepResult* sweep, const std::vector<int>& scenarios) {
  for (int id : scenarios) {
    ScenarioSummary s;
    s.scenario = id;
    std::vector<double> medians;
    double dev_sum = 0;
    for (const CellResult& c : sweep->cells) {
      if (c.scenario != id) continue;
      ++s.cells;
      if (c.converged) ++s.converged;
      s.dfg_iters_avg += c.dfg_iters;
      s.damped_avg += c.damped_iters;
      s.pure_avg += c.pure_iters;
      s.damped_max = std::max(s.damped_max, c.damped_iters);
      s.pure_max = std::max(s.pure_max, c.pure_iters);
      medians.push_back(c.median_seconds);
      dev_sum += c.stddev_seconds;
    }
    if (s.cells > 0) {
      const double n = s.cells;
      s.dfg_iters_avg /= n;
      s.damped_avg /= n;
      s.pure_avg /= n;
      s.best_seconds = *std::min_element(medians.begin(), medians.end());
      s.worst_seconds = *std::max_element(medians.begin(), medians.end());
      double total = 0;
      for (double t : medians) total += t;
      s.average_seconds = total / n;
      s.average_deviation = dev_sum / n;
    }
    sweep->summaries.push_back(s);
  }
}

void Check(SweepResult* sweep) {
  auto add = [&](std::string name, bool ok, std::string detail) {
    sweep->checks.push_back(StructuralCheck{std::move(name), ok, std::move(detail)});
  };

  bool have3 = false;
  bool have4 = false;
  int damped3 = 0;
  int pure3_max = 0;
  int switched3 = 0;
  int bad_oracle = 0;
  int converged = 0;
  int total = 0;
  double worst_err = 0;
  double worst_infeas = 0;
  for (const CellResult& c : sweep->cells) {
    ++total;
    if (c.scenario == 3) {
      have3 = true;
      const bool dfg_capped = c.report.termination == Termination::kCap && c.report.phase2_iters == 0;
      if (c.error.empty() && !dfg_capped) {
        ++switched3;
        damped3 += c.damped_iters;
        pure3_max = std::max(pure3_max, c.pure_iters);
      }
    }
    if (c.scenario == 4) have4 = true;
    if (c.converged) {
      ++converged;
      worst_err = std::max(worst_err, c.objective_error);
      worst_infeas = std::max(worst_infeas, c.infeasibility);
      if (c.objective_error > kObjectiveTol || c.infeasibility > kFeasTol) ++bad_oracle;
    }
  }

  int oracle_fail = 0;
  for (const OracleResult& o : sweep->oracle) {
    if (o.status != OracleStatus::kOptimal) ++oracle_fail;
  }
  add("oracle_certified", oracle_fail == 0,
      std::to_string(sweep->oracle.size() - oracle_fail) + "/" +
          std::to_string(sweep->oracle.size()) + " states certified optimal");
  add("oracle_agreement", bad_oracle == 0,
      std::to_string(converged) + "/" + std::to_string(total) +
          " cells converged; worst objective error " + io::FormatDouble(worst_err) +
          ", worst infeasibility " + io::FormatDouble(worst_infeas));
  if (have3) {
    add("scenario3_no_damped_iterations", damped3 == 0,
        std::to_string(damped3) + " damped iterations over " + std::to_string(switched3) +
            " switched runs");
    add("scenario3_pure_iterations_le_15", pure3_max <= kMaxPureIters,
        "max pure iterations " + std::to_string(pure3_max));
  }
  if (have3 && have4) {
    double dfg3 = 0;
    double dfg4 = 0;
    for (const ScenarioSummary& s : sweep->summaries) {
      if (s.scenario == 3) dfg3 = s.dfg_iters_avg;
      if (s.scenario == 4) dfg4 = s.dfg_iters_avg;
    }
    add("scenario4_iterations_exceed_scenario3_dfg", dfg4 > dfg3,
        "average DFG iterations: scenario 4 " + io::FormatDouble(dfg4) + ", scenario 3 " +
            io::FormatDouble(dfg3));
  }
}

}  // namespace

Scenario ScenarioById(int id) {
  switch (id) {
    case 1:
      return {1, InitRule::kLsWarmLambdaOne};
    case 2:
      return {2, InitRule::kLsWarmLambdaSmall};
    case 3:
      return {3, InitRule::kHybridDefault};
    case 4:
      return {4, InitRule::kDfgOnly};
    default:
      throw std::invalid_argument("scenario must be 1, 2, 3 or 4");
  }
}

const char* ToString(InitRule rule) {
  switch (rule) {
    case InitRule::kLsWarmLambdaOne:
      return "ls_warm_lambda_one";
    case InitRule::kLsWarmLambdaSmall:
      return "ls_warm_lambda_small";
    case InitRule::kHybridDefault:
      return "hybrid_default";
    case InitRule::kDfgOnly:
      return "dfg_only";
  }
  return "unknown";
}

LtiModel DiscretizeZoh(const MatrixXd& Ac, const MatrixXd& Bc, const MatrixXd& C,
                       const MatrixXd& D, double T) {
  const Index nx = Ac.rows();
  const Index nu = Bc.cols();
  MatrixXd aug = MatrixXd::Zero(nx + nu, nx + nu);
  aug.topLeftCorner(nx, nx) = Ac * T;
  aug.topRightCorner(nx, nu) = Bc * T;
  const MatrixXd phi = aug.exp();
  return LtiModel{phi.topLeftCorner(nx, nx), phi.topRightCorner(nx, nu), C, D};
}

BenchmarkSuite PlanarBenchmark() {
  BenchmarkSuite s;
  s.name = "planar";
  s.model.A = (MatrixXd(2, 2) << 1.2, 0.5, 0.0, 1.1).finished();
  s.model.B = (MatrixXd(2, 1) << 0.0, 1.0).finished();
  s.model.C = MatrixXd::Identity(2, 2);
  s.model.D = MatrixXd::Zero(2, 1);
  s.config.horizon = 10;
  s.config.Q = MatrixXd::Identity(2, 2);
  s.config.R = MatrixXd::Identity(1, 1);
  s.config.u_bounds = Box{VectorXd::Constant(1, -1.0), VectorXd::Constant(1, 1.0)};
  s.config.y_bounds = Box{VectorXd::Constant(2, -1.0), VectorXd::Constant(2, 1.0)};
  s.l_dh = 200;
  s.repetitions = 11;
  // Uniform grid over the output box, keeping the states whose QP is feasible.
  const CondensedMpc c = Condense(s.model, s.config);
  const auto problem = std::make_shared<const Problem>(c.qp);
  for (int i = 0; i <= 10; ++i) {
    for (int j = 0; j <= 10; ++j) {
      const VectorXd x = (VectorXd(2) << -1.0 + 0.2 * i, -1.0 + 0.2 * j).finished();
      if (c.ViolatedConstantRow(x)) continue;
      if (SolveReference(QpInstance(problem, x)).status == OracleStatus::kOptimal) {
        s.initial_states.push_back(x);
      }
    }
  }
  s.metadata = {{"reference_m_d", 1.4529},
                {"reference_eta_d", 0.0106},
                {"reference_L_dH", 200},
                {"reference_iterations",
                 {{"scenario1", {{"damped", 6}, {"pure", 20}}},
                  {"scenario2", {{"damped", 16}, {"pure", 8}}},
                  {"scenario3", {{"dfg", 65}, {"pure", 6}}},
                  {"scenario4", {{"dfg", 591}}}}},
                {"plant", "stand-in: A = [[1.2, 0.5], [0, 1.1]], B = [0; 1], C = I, D = 0"}};
  return s;
}

BenchmarkSuite CessnaBenchmark() {
  constexpr double kDeg = std::numbers::pi / 180.0;
  constexpr double kT = 0.25;
  BenchmarkSuite s;
  s.name = "cessna";
  // States: angle of attack [rad], pitch [rad], pitch rate [rad/s],
  // altitude [m]. Input: elevator angle [rad]. Outputs: pitch, altitude.
  const MatrixXd Ac = (MatrixXd(4, 4) << -1.2822, 0, 0.98, 0,  //
                       0, 0, 1, 0,                             //
                       -5.4293, 0, -1.8366, 0,                 //
                       -128.2, 128.2, 0, 0)
                          .finished();
  const MatrixXd Bc = (MatrixXd(4, 1) << -0.3, 0, -17, 0).finished();
  const MatrixXd C = (MatrixXd(2, 4) << 0, 1, 0, 0, 0, 0, 0, 1).finished();
  const MatrixXd D = MatrixXd::Zero(2, 1);
  s.model = DiscretizeZoh(Ac, Bc, C, D, kT);
  s.config.horizon = 10;
  s.config.Q = MatrixXd::Identity(4, 4);
  s.config.R = MatrixXd::Constant(1, 1, 10.0);
  s.config.u_bounds =
      Box{VectorXd::Constant(1, -15 * kDeg), VectorXd::Constant(1, 15 * kDeg)};
  s.config.du_bounds =
      Box{VectorXd::Constant(1, -30 * kDeg * kT), VectorXd::Constant(1, 30 * kDeg * kT)};
  s.config.y_bounds = Box{(VectorXd(2) << -30 * kDeg, -kInf).finished(),
                          (VectorXd(2) << 30 * kDeg, kInf).finished()};
  s.l_dh = 5e-7;
  s.repetitions = 11;
  std::mt19937 gen(2024u);
  std::uniform_real_distribution<double> altitude(0.0, 60.0);
  for (int i = 0; i < 30; ++i) {
    s.initial_states.push_back((VectorXd(4) << 0, 0, 0, altitude(gen)).finished());
  }
  s.metadata = {{"reference_m_d", 1.1394e-4},
                {"reference_L_d_as_printed", 5e-7},
                {"reference_eta_d", 2.6e-2},
                {"reference_altitude_as_printed", "5000 km"},
                {"reference_speed_m_per_s", 128.2},
                {"reference_times_s",
                 {{"dfg_best", 0.0063},
                  {"pdip", {{"best", 0.0141}, {"worst", 0.0398}, {"average", 0.0264}}},
                  {"hybrid", {{"best", 0.0024}, {"worst", 0.0214}, {"average", 0.0120}}}}},
                {"sampling_time_s", kT}};
  return s;
}

PreparedSuite Prepare(BenchmarkSuite suite) {
  PreparedSuite p;
  p.condensed = Condense(suite.model, suite.config);
  p.problem = std::make_shared<const Problem>(p.condensed.qp);
  p.constants = ComputeDualConstants(*p.problem, suite.l_dh);
  p.suite = std::move(suite);
  return p;
}

PrimalDualPoint WarmStartPoint(const QpInstance& inst, double lambda_level) {
  PrimalDualPoint pt;
  pt.z = inst.unconstrained_minimizer();
  const VectorXd gz = EvalConstraints(inst, pt.z).cwiseAbs();
  pt.s = gz.cwiseMax(1e-8 * std::max(1.0, gz.maxCoeff()));
  pt.lambda = VectorXd::Constant(inst.m(), lambda_level);
  return pt;
}

CellResult SolveCell(const PreparedSuite& prepared, const QpInstance& inst, const Scenario& sc,
                     const RunOptions& options) {
  CellResult c;
  c.scenario = sc.id;
  try {
    RunOutcome run = RunOnce(prepared, inst, sc, options, /*record_trace=*/true);
    c.z = std::move(run.z);
    c.report = std::move(run.report);
    c.termination = c.report.termination;
    c.converged = ReachedTolerance(c.termination);
    c.dfg_iters = c.report.phase1_iters;
    c.damped_iters = c.report.damped_iters;
    c.pure_iters = c.report.pure_iters;
    c.objective = c.report.final_obj;
    c.infeasibility = c.report.infeasibility;
  } catch (const std::exception& e) {
    c.error = e.what();
    c.converged = false;
  }
  return c;
}

bool SweepResult::AllChecksPassed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const StructuralCheck& c) { return c.passed; });
}

SweepResult RunScenarios(const PreparedSuite& prepared, const std::vector<int>& scenarios,
                         const RunOptions& options) {
  const auto& states = prepared.suite.initial_states;
  const int reps = options.repetitions > 0 ? options.repetitions : prepared.suite.repetitions;
  if (reps % 2 == 0) {
    throw std::invalid_argument("repetitions must be odd so the median is one of the runs");
  }
  std::vector<Scenario> scs;
  for (int id : scenarios) scs.push_back(ScenarioById(id));

  SweepResult sweep;
  sweep.oracle.resize(states.size());
  std::vector<std::vector<CellResult>> per_state(states.size());

  auto work = [&](size_t i) {
    const QpInstance inst(prepared.problem, states[i]);
    sweep.oracle[i] = SolveReference(inst);
    const OracleResult& oracle = sweep.oracle[i];
    for (const Scenario& sc : scs) {
      CellResult c = SolveCell(prepared, inst, sc, options);
      c.state_index = static_cast<int>(i);
      if (c.error.empty()) {
        for (int r = 0; r < reps; ++r) {
          const auto t0 = std::chrono::steady_clock::now();
          RunOnce(prepared, inst, sc, options, /*record_trace=*/false);
          c.rep_seconds.push_back(Seconds(std::chrono::steady_clock::now() - t0));
        }
        c.median_seconds = Median(c.rep_seconds);
        c.stddev_seconds = StdDev(c.rep_seconds);
      }
      if (oracle.status == OracleStatus::kOptimal) {
        c.oracle_objective = EvalObjective(inst, oracle.z);
        if (c.z.size() == inst.n()) {
          c.objective_error =
              std::abs(c.objective - c.oracle_objective) / (1 + std::abs(c.oracle_objective));
        }
      }
      per_state[i].push_back(std::move(c));
    }
  };

  const unsigned workers =
      options.timing_strict ? 1u : std::max(1u, std::thread::hardware_concurrency());
  if (workers <= 1 || states.size() <= 1) {
    for (size_t i = 0; i < states.size(); ++i) work(i);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (size_t i = w; i < states.size(); i += workers) work(i);
      });
    }
  }

  for (auto& cells : per_state) {
    for (CellResult& c : cells) sweep.cells.push_back(std::move(c));
  }
  Summarize(&sweep, scenarios);
  Check(&sweep);
  return sweep;
}

void WriteSweep(const PreparedSuite& prepared, const SweepResult& sweep,
                const std::string& out_dir) {
  namespace fs = std::filesystem;
  const fs::path root(out_dir);
  fs::create_directories(root / "traces");

  {
    std::ofstream t1(root / "summary_table1.csv");
    t1 << "scenario,cells,converged,dfg_iters_avg,damped_avg,pure_avg,damped_max,pure_max\n";
    for (const ScenarioSummary& s : sweep.summaries) {
      t1 << s.scenario << ',' << s.cells << ',' << s.converged << ','
         << io::FormatDouble(s.dfg_iters_avg) << ',' << io::FormatDouble(s.damped_avg) << ','
         << io::FormatDouble(s.pure_avg) << ',' << s.damped_max << ',' << s.pure_max << '\n';
    }
  }
  {
    std::ofstream t2(root / "summary_table2.csv");
    t2 << "scenario,best_s,worst_s,average_s,average_deviation_s\n";
    for (const ScenarioSummary& s : sweep.summaries) {
      t2 << s.scenario << ',' << io::FormatDouble(s.best_seconds) << ','
         << io::FormatDouble(s.worst_seconds) << ',' << io::FormatDouble(s.average_seconds)
         << ',' << io::FormatDouble(s.average_deviation) << '\n';
    }
  }
  {
    std::ofstream raw(root / "timings_raw.csv");
    raw << "state,scenario,rep,seconds\n";
    for (const CellResult& c : sweep.cells) {
      for (size_t r = 0; r < c.rep_seconds.size(); ++r) {
        raw << c.state_index << ',' << c.scenario << ',' << r << ','
            << io::FormatDouble(c.rep_seconds[r]) << '\n';
      }
    }
  }
  for (const CellResult& c : sweep.cells) {
    const std::string stem =
        "state" + std::to_string(c.state_index) + "_scenario" + std::to_string(c.scenario);
    if (!c.report.phase1_trace.empty()) {
      std::ofstream f(root / "traces" / (stem + "_dfg.csv"));
      io::WriteDfgTrace(f, c.report.phase1_trace);
    }
    if (!c.report.phase2_trace.empty()) {
      std::ofstream f(root / "traces" / (stem + "_pdip.csv"));
      io::WritePdipTrace(f, c.report.phase2_trace);
    }
  }

  io::Json report;
  report["suite"] = prepared.suite.name;
  report["metadata"] = prepared.suite.metadata;
  report["constants"] = io::ConstantsToJson(prepared.constants);
  report["n"] = prepared.problem->n();
  report["m"] = prepared.problem->m();
  report["controllability_rank"] = ControllabilityRank(prepared.suite.model);
  io::Json cells = io::Json::array();
  for (const CellResult& c : sweep.cells) {
    io::Json j = {{"state", c.state_index},
                  {"scenario", c.scenario},
                  {"termination", ToString(c.termination)},
                  {"converged", c.converged},
                  {"dfg_iters", c.dfg_iters},
                  {"damped_iters", c.damped_iters},
                  {"pure_iters", c.pure_iters},
                  {"median_s", c.median_seconds},
                  {"stddev_s", c.stddev_seconds},
                  {"objective", c.objective},
                  {"oracle_objective", c.oracle_objective},
                  {"objective_error", c.objective_error},
                  {"infeasibility", c.infeasibility}};
    if (!c.error.empty()) j["error"] = c.error;
    cells.push_back(std::move(j));
  }
  report["cells"] = std::move(cells);
  io::Json states = io::Json::array();
  for (size_t i = 0; i < prepared.suite.initial_states.size(); ++i) {
    states.push_back({{"x0", io::ToJson(prepared.suite.initial_states[i])},
                      {"oracle", ToString(sweep.oracle[i].status)},
                      {"oracle_method", sweep.oracle[i].method},
                      {"active_constraints", sweep.oracle[i].active.size()}});
  }
  report["states"] = std::move(states);
  io::Json checks = io::Json::array();
  for (const StructuralCheck& c : sweep.checks) {
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  report["checks"] = std::move(checks);
  io::WriteJsonFile((root / "report.json").string(), report);
}

ClosedLoopLog ClosedLoop(const PreparedSuite& prepared, int scenario, const VectorXd& x0,
                         int steps, const RunOptions& options) {
  if (steps < 1) {
    throw std::invalid_argument("steps must be at least 1");
  }
  const LtiModel& model = prepared.suite.model;
  const Index nu = model.n_u();
  ClosedLoopLog log;
  VectorXd x = x0;
  for (int t = 0; t < steps; ++t) {
    ClosedLoopStep step;
    step.t = t;
    step.x = x;
    if (const auto bad = prepared.condensed.ViolatedConstantRow(x)) {
      log.completed = false;
      log.status = std::string("state violates a bound on ") + ToString(bad->signal) +
                   " at stage " + std::to_string(bad->stage);
      break;
    }
    const QpInstance inst(prepared.problem, x);
    VectorXd z;
    const auto t0 = std::chrono::steady_clock::now();
    if (scenario == 0) {
      const OracleResult o = SolveReference(inst);
      if (o.status != OracleStatus::kOptimal) {
        log.completed = false;
        log.status = std::string("reference solve ") + ToString(o.status);
        break;
      }
      z = o.z;
    } else {
      const RunOutcome run = RunOnce(prepared, inst, ScenarioById(scenario), options, false);
      step.dfg_iters = run.report.phase1_iters;
      step.newton_iters = run.report.phase2_iters;
      step.termination = run.report.termination;
      if (!ReachedTolerance(run.report.termination)) {
        log.completed = false;
        log.status = std::string("solver stopped with ") + ToString(run.report.termination);
        break;
      }
      z = run.z;
    }
    step.solve_seconds = Seconds(std::chrono::steady_clock::now() - t0);
    step.u = z.head(nu);
    if (const auto& ub = prepared.suite.config.u_bounds) {
      for (Index i = 0; i < nu; ++i) {
        if (step.u[i] > ub->upper[i] + 1e-9 || step.u[i] < ub->lower[i] - 1e-9) {
          log.inputs_within_bounds = false;
        }
      }
    }
    x = model.A * x + model.B * step.u;
    log.steps.push_back(std::move(step));
  }
  if (log.completed) {
    log.status = "completed";
  }
  return log;
}

}  // namespace hyqp
