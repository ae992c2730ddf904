// Benchmark protocol: two plants, four solver scenarios, per-state timing
// with median-of-repetitions, oracle comparison and closed-loop simulation.
#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "hyqp/hybrid_solver.hpp"
#include "hyqp/mpc_condense.hpp"
#include "hyqp/reference_oracle.hpp"

namespace hyqp {

// 1: interior point from (z_LS, lambda = 1)
// 2: interior point from (z_LS, lambda = 1e-6)
// 3: hybrid
// 4: dual fast gradient alone
enum class InitRule { kLsWarmLambdaOne, kLsWarmLambdaSmall, kHybridDefault, kDfgOnly };

struct Scenario {
  int id = 3;
  InitRule init_rule = InitRule::kHybridDefault;
};

Scenario ScenarioById(int id);  // throws std::invalid_argument outside 1..4
const char* ToString(InitRule rule);

struct BenchmarkSuite {
  std::string name;
  LtiModel model;
  MpcConfig config;
  std::vector<VectorXd> initial_states;
  int repetitions = 11;
  double l_dh = 0;
  // Reference values quoted alongside the suite; informational only.
  nlohmann::json metadata;
};

// Zero-order-hold discretization of x' = Ac x + Bc u with step T.
LtiModel DiscretizeZoh(const MatrixXd& Ac, const MatrixXd& Bc, const MatrixXd& C,
                       const MatrixXd& D, double T);

// Unstable 2-state plant with |u| <= 1, |y| <= 1, C = I, L_dH = 200. Initial
// states: the feasible points of a 0.2-spaced grid over [-1, 1]^2.
BenchmarkSuite PlanarBenchmark();
// Longitudinal aircraft model, 4 states, 1 input, pitch and altitude
// outputs; elevator, elevator-rate and pitch bounds; T = 0.25, Q = I,
// R = 10, N = 10; 30 altitude offsets drawn uniformly from [0, 60].
BenchmarkSuite CessnaBenchmark();

// Suite with its condensed problem and dual constants, ready to solve.
struct PreparedSuite {
  BenchmarkSuite suite;
  CondensedMpc condensed;
  std::shared_ptr<const Problem> problem;
  DualConstants constants;
};
PreparedSuite Prepare(BenchmarkSuite suite);

// Initial point for the interior-point scenarios: z_LS with the given
// multiplier level and s = |g(z_LS)| floored like the hybrid hand-off.
PrimalDualPoint WarmStartPoint(const QpInstance& inst, double lambda_level);

struct CellResult {
  int state_index = 0;
  int scenario = 0;
  Termination termination = Termination::kConverged;
  bool converged = false;  // met the tolerance (a premature-switch flag still counts)
  int dfg_iters = 0;
  int damped_iters = 0;
  int pure_iters = 0;
  double median_seconds = 0;
  double stddev_seconds = 0;
  std::vector<double> rep_seconds;
  double objective = 0;
  double oracle_objective = 0;
  double objective_error = 0;  // |f0(z) - f0(z*)| / (1 + |f0(z*)|)
  double infeasibility = 0;
  VectorXd z;
  SolveReport report;  // from the first repetition, with traces
  std::string error;
};

struct RunOptions {
  PdipConfig pdip;  // epsilon = 1e-6 by default
  int repetitions = 0;   // 0: use the suite value
  bool timing_strict = false;
  int dfg_max_iters = 50000;
};

// Solves one state with one scenario (a single repetition, traces on).
CellResult SolveCell(const PreparedSuite& prepared, const QpInstance& inst, const Scenario& sc,
                     const RunOptions& options);

struct ScenarioSummary {
  int scenario = 0;
  int cells = 0;
  int converged = 0;
  double dfg_iters_avg = 0;
  double damped_avg = 0;
  double pure_avg = 0;
  int damped_max = 0;
  int pure_max = 0;
  double best_seconds = 0;
  double worst_seconds = 0;
  double average_seconds = 0;
  double average_deviation = 0;  // mean of per-state standard deviations
};

struct StructuralCheck {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct SweepResult {
  std::vector<OracleResult> oracle;  // per state
  std::vector<CellResult> cells;
  std::vector<ScenarioSummary> summaries;
  std::vector<StructuralCheck> checks;
  bool AllChecksPassed() const;
};

// Every (state x scenario) cell; failures are recorded, never thrown. Throws
// std::invalid_argument on an even repetition count or an unknown scenario.
SweepResult RunScenarios(const PreparedSuite& prepared, const std::vector<int>& scenarios,
                         const RunOptions& options);

// Writes summary_table1.csv, summary_table2.csv, timings_raw.csv,
// traces/*.csv and report.json under out_dir.
void WriteSweep(const PreparedSuite& prepared, const SweepResult& sweep,
                const std::string& out_dir);

struct ClosedLoopStep {
  int t = 0;
  VectorXd x;
  VectorXd u;  // first input applied
  int dfg_iters = 0;
  int newton_iters = 0;
  Termination termination = Termination::kConverged;
  double solve_seconds = 0;
};

struct ClosedLoopLog {
  std::vector<ClosedLoopStep> steps;
  bool completed = true;
  bool inputs_within_bounds = true;
  std::string status;
};

// Scenario 0 solves each step with the reference oracle.
ClosedLoopLog ClosedLoop(const PreparedSuite& prepared, int scenario, const VectorXd& x0,
                         int steps, const RunOptions& options = {});

}  // namespace hyqp
