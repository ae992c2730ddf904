#include "hyqp/pdip_solver.hpp"

#include <gtest/gtest.h>

#include "hyqp/bench_harness.hpp"
#include "hyqp/reference_oracle.hpp"
#include "test_util.hpp"

namespace hyqp {
namespace {

using testing::MakeProblem;
using testing::MakeRandomInstance;
using testing::OneDimInstance;
using testing::RandomMatrix;
using testing::RandomSpd;
using testing::RandomVector;
using testing::Uniform;

PrimalDualPoint RandomInterior(std::mt19937& gen, Index n, Index m) {
  PrimalDualPoint pt;
  pt.z = RandomVector(gen, n);
  pt.lambda.resize(m);
  pt.s.resize(m);
  for (Index i = 0; i < m; ++i) {
    pt.lambda[i] = std::exp(Uniform(gen, -4, 2));
    pt.s[i] = std::exp(Uniform(gen, -4, 2));
  }
  return pt;
}

PrimalDualPoint PlainStart(const QpInstance& inst) {
  return PrimalDualPoint{VectorXd::Zero(inst.n()), VectorXd::Ones(inst.m()),
                         EvalConstraints(inst, VectorXd::Zero(inst.n())).cwiseAbs().array() + 1.0};
}

// Dense solve of the full (n + 2m) linearization.
NewtonDirection DenseNewton(const QpInstance& inst, const PrimalDualPoint& pt,
                            const KktResidual& res) {
  const Index n = inst.n(), m = inst.m();
  MatrixXd K = MatrixXd::Zero(n + 2 * m, n + 2 * m);
  K.topLeftCorner(n, n) = inst.data().H;
  K.block(0, n, n, m) = inst.data().G.transpose();
  K.block(n, 0, m, n) = inst.data().G;
  K.block(n, n + m, m, m) = MatrixXd::Identity(m, m);
  K.block(n + m, n, m, m) = pt.s.asDiagonal();
  K.block(n + m, n + m, m, m) = pt.lambda.asDiagonal();
  VectorXd rhs(n + 2 * m);
  rhs << -res.r_dual, -res.r_pri, -res.r_cent;
  const VectorXd sol = K.fullPivLu().solve(rhs);
  return NewtonDirection{sol.head(n), sol.segment(n, m), sol.tail(m)};
}

TEST(ResidualTest, HandInstance) {
  const QpInstance inst = OneDimInstance();
  const PrimalDualPoint pt{VectorXd::Constant(1, 2.0), VectorXd::Ones(1), VectorXd::Ones(1)};
  const KktResidual r = Residual(inst, pt, 0.25);
  EXPECT_DOUBLE_EQ(r.r_dual[0], 1.0);
  EXPECT_DOUBLE_EQ(r.r_pri[0], 0.0);
  EXPECT_DOUBLE_EQ(r.r_cent[0], 0.75);
  EXPECT_DOUBLE_EQ(r.mu, 1.0);
  EXPECT_DOUBLE_EQ(r.tau, 0.25);
  EXPECT_DOUBLE_EQ(r.Norm(), std::sqrt(1.0 + 0.75 * 0.75));
}

// An instance built around a point that solves the relaxed system exactly.
struct CenteredCase {
  QpInstance inst;
  PrimalDualPoint pt;
  double tau;
};

CenteredCase MakeCentered(std::mt19937& gen, Index n, Index m, double tau) {
  PrimalDualPoint pt = RandomInterior(gen, n, m);
  pt.lambda = tau * pt.s.cwiseInverse();
  CondensedQp qp;
  qp.H = RandomSpd(gen, n);
  qp.G = RandomMatrix(gen, m, n);
  qp.E = MatrixXd::Zero(m, 1);
  qp.g = -qp.G * pt.z - pt.s;
  qp.h = -(qp.H * pt.z + qp.G.transpose() * pt.lambda);
  return {QpInstance(std::make_shared<const Problem>(std::move(qp)), VectorXd::Ones(1)), pt, tau};
}

TEST(ResidualTest, CenteredPointIsRoot) {
  std::mt19937 gen(13);
  const CenteredCase c = MakeCentered(gen, 4, 7, 0.3);
  const KktResidual r = Residual(c.inst, c.pt, c.tau);
  EXPECT_LE(r.Norm(), 1e-12);
  const NewtonDirection d = SolveNewton(c.inst, c.pt, r);
  EXPECT_LE(d.dz.norm() + d.dlambda.norm() + d.ds.norm(), 1e-10);
}

TEST(NewtonTest, MatchesDenseSolve) {
  std::mt19937 gen(17);
  for (int trial = 0; trial < 40; ++trial) {
    const auto ri = MakeRandomInstance(gen, 6, 10);
    const QpInstance inst = ri.inst();
    const PrimalDualPoint pt = RandomInterior(gen, 6, 10);
    const double mu = pt.s.dot(pt.lambda) / 10;
    const KktResidual res = Residual(inst, pt, 0.1 * mu);
    const NewtonDirection a = SolveNewton(inst, pt, res);
    const NewtonDirection b = DenseNewton(inst, pt, res);
    EXPECT_LE((a.dz - b.dz).norm(), 1e-8 * (1 + b.dz.norm()));
    EXPECT_LE((a.dlambda - b.dlambda).norm(), 1e-8 * (1 + b.dlambda.norm()));
    EXPECT_LE((a.ds - b.ds).norm(), 1e-8 * (1 + b.ds.norm()));
  }
}

// The linearization is exact to first order, so a short step shrinks the
// residual by about the step length.
TEST(NewtonTest, FirstOrderDecrease) {
  std::mt19937 gen(19);
  for (int trial = 0; trial < 20; ++trial) {
    const auto ri = MakeRandomInstance(gen, 5, 9);
    const QpInstance inst = ri.inst();
    const PrimalDualPoint pt = RandomInterior(gen, 5, 9);
    const KktResidual res = Residual(inst, pt, 0.05);
    const NewtonDirection d = SolveNewton(inst, pt, res);
    const double rho = 1e-5;
    const PrimalDualPoint next{pt.z + rho * d.dz, pt.lambda + rho * d.dlambda,
                               pt.s + rho * d.ds};
    EXPECT_LE(Residual(inst, next, 0.05).Norm(), (1 - 0.99 * rho) * res.Norm());
  }
}

TEST(StepTest, MaxPositiveStepAndCap) {
  const PrimalDualPoint pt{VectorXd::Zero(1), (VectorXd(2) << 1, 1).finished(),
                           (VectorXd(2) << 1, 2).finished()};
  NewtonDirection d{VectorXd::Zero(1), (VectorXd(2) << 0.5, -4).finished(),
                    (VectorXd(2) << -2, 1).finished()};
  EXPECT_DOUBLE_EQ(MaxPositiveStep(pt, d), 0.25);
  d.dlambda = VectorXd::Ones(2);
  d.ds = VectorXd::Ones(2);
  EXPECT_TRUE(std::isinf(MaxPositiveStep(pt, d)));

  // Backtrack starts from 0.99 times the largest positive step.
  const QpInstance inst(MakeProblem(MatrixXd::Identity(1, 1), MatrixXd::Ones(2, 1),
                                    -VectorXd::Ones(2)),
                        VectorXd(0));
  const NewtonDirection cut{VectorXd::Zero(1), (VectorXd(2) << 0.5, -4).finished(),
                            (VectorXd(2) << -2, 1).finished()};
  const LineSearchResult ls = Backtrack(inst, pt, cut, Residual(inst, pt, 0.1), PdipConfig{});
  EXPECT_DOUBLE_EQ(ls.rho_max, 0.99 * 0.25);
  EXPECT_LE(ls.rho, ls.rho_max);
}

TEST(ConfigTest, Validation) {
  EXPECT_NO_THROW(ValidatePdipConfig(PdipConfig{}));
  auto expect_bad = [](auto mutate) {
    PdipConfig c;
    mutate(c);
    EXPECT_THROW(ValidatePdipConfig(c), std::invalid_argument);
  };
  expect_bad([](PdipConfig& c) { c.kappa = 0; });
  expect_bad([](PdipConfig& c) { c.kappa = 1; });
  expect_bad([](PdipConfig& c) { c.alpha = 0.5; });
  expect_bad([](PdipConfig& c) { c.beta = 1; });
  expect_bad([](PdipConfig& c) { c.epsilon = 0; });
  expect_bad([](PdipConfig& c) { c.feas_tol = -1; });
  expect_bad([](PdipConfig& c) { c.fraction_to_boundary = 1; });
  expect_bad([](PdipConfig& c) { c.max_iters = 0; });
}

TEST(RunPdipTest, RejectsBadStart) {
  const QpInstance inst = OneDimInstance();
  EXPECT_THROW(RunPdip(inst, PrimalDualPoint{VectorXd::Zero(1), VectorXd::Zero(1),
                                             VectorXd::Ones(1)},
                       PdipConfig{}),
               std::invalid_argument);
  EXPECT_THROW(RunPdip(inst, PrimalDualPoint{VectorXd::Zero(2), VectorXd::Ones(1),
                                             VectorXd::Ones(1)},
                       PdipConfig{}),
               std::invalid_argument);
}

// The objective merit only accepts steps that lower f0, so it is started from
// a strictly feasible point above the optimum.
TEST(RunPdipTest, OneDim) {
  const QpInstance inst = OneDimInstance();
  const PrimalDualPoint feasible{VectorXd::Constant(1, 2.0), VectorXd::Ones(1), VectorXd::Ones(1)};
  for (MeritRule merit : {MeritRule::kResidualNorm, MeritRule::kObjective}) {
    PdipConfig cfg;
    cfg.merit = merit;
    cfg.epsilon = 1e-10;
    const PdipResult r =
        RunPdip(inst, merit == MeritRule::kObjective ? feasible : PlainStart(inst), cfg);
    ASSERT_EQ(r.termination, Termination::kConverged) << r.message;
    EXPECT_NEAR(r.point.z[0], 1.0, 1e-8);
    EXPECT_NEAR(r.point.lambda[0], 1.0, 1e-8);
  }
}

TEST(RunPdipTest, ConvergesToOracle) {
  std::mt19937 gen(23);
  for (int trial = 0; trial < 25; ++trial) {
    const auto ri = MakeRandomInstance(gen, 8, 16);
    const QpInstance inst = ri.inst();
    const OracleResult o = SolveReference(inst);
    ASSERT_EQ(o.status, OracleStatus::kOptimal);
    const PdipConfig cfg;
    const PdipResult r = RunPdip(inst, PlainStart(inst), cfg);
    ASSERT_EQ(r.termination, Termination::kConverged) << r.message;
    EXPECT_LE(r.final_mu, cfg.epsilon);
    EXPECT_LE(r.r_dual_norm, cfg.feas_tol);
    EXPECT_LE(r.r_pri_norm, cfg.feas_tol);
    EXPECT_GT(r.point.s.minCoeff(), 0);
    EXPECT_GT(r.point.lambda.minCoeff(), 0);
    EXPECT_EQ(r.iterations, r.damped_iters + r.pure_iters);
    ASSERT_EQ(r.trace.size(), static_cast<size_t>(r.iterations));
    for (const PdipTraceRow& row : r.trace) {
      EXPECT_GT(row.rho, 0);
      EXPECT_LE(row.rho, 1);
      EXPECT_EQ(row.phase == StepPhase::kPure, row.rho == 1.0);
      EXPECT_NEAR(row.tau, cfg.kappa * row.mu, 1e-15 * (1 + row.mu));
    }
    const double f = EvalObjective(inst, r.point.z), f_star = EvalObjective(inst, o.z);
    EXPECT_LE(std::abs(f - f_star), 1e-5 * (1 + std::abs(f_star)));
    EXPECT_LE(PositiveViolation(inst, r.point.z), 1e-6);
  }
}

TEST(RunPdipTest, IterationCap) {
  std::mt19937 gen(29);
  const auto ri = MakeRandomInstance(gen, 5, 10);
  PdipConfig cfg;
  cfg.max_iters = 1;
  const PdipResult r = RunPdip(ri.inst(), PlainStart(ri.inst()), cfg);
  EXPECT_EQ(r.termination, Termination::kCap);
  EXPECT_EQ(r.iterations, 1);
}

// In pure mode the step is the capped unit step and the premature flag is
// raised exactly when three consecutive steps fall below 0.5.
TEST(RunPdipTest, PureModeStepRule) {
  std::mt19937 gen(31);
  int flagged = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const auto ri = MakeRandomInstance(gen, 6, 12);
    const QpInstance inst = ri.inst();
    PrimalDualPoint start = RandomInterior(gen, 6, 12);
    const PdipResult r = RunPdip(inst, start, PdipConfig{}, PdipOptions{true, true});
    int run = 0;
    bool three = false;
    for (const PdipTraceRow& row : r.trace) {
      run = row.rho < 0.5 ? run + 1 : 0;
      three = three || run >= 3;
      EXPECT_LE(row.rho, 1.0);
    }
    if (r.termination == Termination::kConverged || r.termination == Termination::kSwitchPremature) {
      EXPECT_EQ(r.termination == Termination::kSwitchPremature, three);
      EXPECT_LE(r.final_mu, 1e-6);
    }
    flagged += three ? 1 : 0;
  }
  EXPECT_GT(flagged, 0);
}

TEST(RunPdipTest, PlanarScenarioOneIterationBudget) {
  const PreparedSuite p = Prepare(PlanarBenchmark());
  for (const VectorXd& x : p.suite.initial_states) {
    const QpInstance inst(p.problem, x);
    const PdipResult r = RunPdip(inst, WarmStartPoint(inst, 1.0), PdipConfig{},
                                 PdipOptions{false, false});
    ASSERT_EQ(r.termination, Termination::kConverged) << r.message;
    EXPECT_GE(r.iterations, 5);
    EXPECT_LE(r.iterations, 60);
  }
}

}  // namespace
}  // namespace hyqp
