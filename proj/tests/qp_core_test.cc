#include "hyqp/qp_core.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "test_util.hpp"

namespace hyqp {
namespace {

using testing::MakeProblem;
using testing::RandomMatrix;
using testing::RandomSpd;
using testing::RandomVector;

CondensedQp BoxQp() {
  CondensedQp qp;
  qp.H = MatrixXd::Identity(2, 2);
  qp.h = MatrixXd::Zero(2, 0);
  qp.G.resize(4, 2);
  qp.G << MatrixXd::Identity(2, 2), -MatrixXd::Identity(2, 2);
  qp.E = MatrixXd::Zero(4, 0);
  qp.g = -VectorXd::Ones(4);
  return qp;
}

TEST(ValidateTest, IdentityBoxIsValid) {
  const ValidationResult r = Validate(BoxQp());
  EXPECT_TRUE(r.ok) << r.message;
}

TEST(ValidateTest, AsymmetricHessian) {
  CondensedQp qp = BoxQp();
  qp.H << 1, 2, 0, 1;
  const ValidationResult r = Validate(qp);
  ASSERT_FALSE(r.ok);
  EXPECT_EQ(r.kind, ValidationErrorKind::kAsymmetric);
}

TEST(ValidateTest, IndefiniteHessian) {
  CondensedQp qp = BoxQp();
  qp.H << 1, 0, 0, -1;
  const ValidationResult r = Validate(qp);
  ASSERT_FALSE(r.ok);
  EXPECT_EQ(r.kind, ValidationErrorKind::kNotPositiveDefinite);
}

TEST(ValidateTest, DimensionMismatch) {
  CondensedQp qp = BoxQp();
  qp.g = -VectorXd::Ones(3);
  ValidationResult r = Validate(qp);
  ASSERT_FALSE(r.ok);
  EXPECT_EQ(r.kind, ValidationErrorKind::kDimensionMismatch);

  qp = BoxQp();
  qp.E = MatrixXd::Zero(4, 1);
  r = Validate(qp);
  ASSERT_FALSE(r.ok);
  EXPECT_EQ(r.kind, ValidationErrorKind::kDimensionMismatch);
}

TEST(ValidateTest, EmptyAndNonFinite) {
  CondensedQp qp = BoxQp();
  qp.G.resize(0, 2);
  qp.E.resize(0, 0);
  qp.g.resize(0);
  EXPECT_EQ(Validate(qp).kind, ValidationErrorKind::kEmpty);

  qp = BoxQp();
  qp.g[1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(Validate(qp).kind, ValidationErrorKind::kNonFinite);
}

TEST(ValidateTest, SymmetryToleranceIsRelative) {
  CondensedQp qp = BoxQp();
  qp.H << 1e6, 1e6 * 0.25, 1e6 * 0.25 * (1 + 1e-14), 1e6;
  EXPECT_TRUE(Validate(qp).ok);
  qp.H(1, 0) = 1e6 * 0.25 * (1 + 1e-9);
  EXPECT_EQ(Validate(qp).kind, ValidationErrorKind::kAsymmetric);
}

TEST(ProblemTest, ThrowsWithKind) {
  CondensedQp qp = BoxQp();
  qp.H << 1, 0, 0, -1;
  try {
    Problem p(qp);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.kind(), ValidationErrorKind::kNotPositiveDefinite);
  }
}

TEST(ProblemTest, CholeskyReconstructsHessian) {
  std::mt19937 gen(7);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 1 + trial % 12;
    CondensedQp qp;
    qp.H = RandomSpd(gen, n, 1e-3);
    qp.h = RandomMatrix(gen, n, 1);
    qp.G = RandomMatrix(gen, 3, n);
    qp.E = RandomMatrix(gen, 3, 1);
    qp.g = RandomVector(gen, 3);
    const Problem p(qp);
    const MatrixXd L = p.cholesky().matrixL();
    EXPECT_LE((L * L.transpose() - qp.H).norm(), 1e-10 * qp.H.norm());
    EXPECT_LE((qp.H * p.hinv_gt() - qp.G.transpose()).norm(), 1e-9 * (1 + qp.G.norm()));
  }
}

TEST(QpInstanceTest, RejectsWrongStateSize) {
  auto p = std::make_shared<const Problem>(BoxQp());
  EXPECT_THROW(QpInstance(p, VectorXd::Zero(1)), std::invalid_argument);
}

TEST(DualConstantsTest, Identity) {
  const auto p = MakeProblem(MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2),
                             -VectorXd::Ones(2));
  const DualConstants c = ComputeDualConstants(*p, 1.0);
  EXPECT_NEAR(c.L_d, 1.0, 1e-12);
  EXPECT_NEAR(c.m_d, 1.0, 1e-12);
  EXPECT_NEAR(c.M_d, 1.0, 1e-12);
  EXPECT_NEAR(c.eta_d, 1.0, 1e-12);
  EXPECT_EQ(c.L_dH, 1.0);
}

TEST(DualConstantsTest, ScaledHessian) {
  const auto p = MakeProblem(2 * MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2),
                             -VectorXd::Ones(2));
  const DualConstants c = ComputeDualConstants(*p, 1.0);
  EXPECT_NEAR(c.L_d, 0.5, 1e-12);
  EXPECT_NEAR(c.m_d, 0.5, 1e-12);
  EXPECT_NEAR(c.M_d, 0.5, 1e-12);
  EXPECT_NEAR(c.eta_d, 0.25, 1e-12);
}

// Eigendecomposition of the explicitly formed G H^-1 G', H and G'G.
TEST(DualConstantsTest, MatchesEigendecomposition) {
  std::mt19937 gen(11);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixXd H = RandomSpd(gen, 3);
    const MatrixXd G = RandomMatrix(gen, 5, 3);
    const auto p = MakeProblem(H, G, -VectorXd::Ones(5));
    const DualConstants c = ComputeDualConstants(*p, 10.0);

    const MatrixXd M = G * H.inverse() * G.transpose();
    const Eigen::SelfAdjointEigenSolver<MatrixXd> me(0.5 * (M + M.transpose()));
    const Eigen::SelfAdjointEigenSolver<MatrixXd> he(H);
    const Eigen::JacobiSVD<MatrixXd> gs(G);
    const double g2 = gs.singularValues()[0] * gs.singularValues()[0];
    const double m_d = g2 / he.eigenvalues().maxCoeff();
    EXPECT_LE(testing::RelErr(c.L_d, me.eigenvalues().maxCoeff()), 1e-8);
    EXPECT_LE(testing::RelErr(c.m_d, m_d), 1e-8);
    EXPECT_LE(testing::RelErr(c.M_d, g2 / he.eigenvalues().minCoeff()), 1e-8);
    EXPECT_LE(testing::RelErr(c.eta_d, m_d * m_d / 10.0), 1e-8);
  }
}

TEST(DualConstantsTest, Sandwich) {
  std::mt19937 gen(13);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 1 + trial % 8;
    const Index m = 1 + (trial * 7) % 15;
    const auto p = MakeProblem(RandomSpd(gen, n, 0.1), RandomMatrix(gen, m, n),
                               -VectorXd::Ones(m));
    const DualConstants c = ComputeDualConstants(*p, 1.0);
    EXPECT_GT(c.m_d, 0);
    EXPECT_LE(c.m_d, c.L_d * (1 + 1e-8));
    EXPECT_LE(c.L_d, c.M_d * (1 + 1e-8));
    EXPECT_LE(c.eta_d, c.m_d * c.m_d / c.L_dH * (1 + 1e-12));
  }
}

TEST(DualConstantsTest, Errors) {
  const auto p = MakeProblem(MatrixXd::Identity(2, 2), MatrixXd::Zero(1, 2), VectorXd::Ones(1));
  EXPECT_THROW(ComputeDualConstants(*p, 1.0), std::runtime_error);
  const auto q = MakeProblem(MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2),
                             -VectorXd::Ones(2));
  EXPECT_THROW(ComputeDualConstants(*q, 0.0), std::invalid_argument);
  EXPECT_THROW(ComputeDualConstants(*q, -1.0), std::invalid_argument);
}

TEST(DualConstantsTest, Deterministic) {
  std::mt19937 gen(17);
  const auto p = MakeProblem(RandomSpd(gen, 6), RandomMatrix(gen, 9, 6), -VectorXd::Ones(9));
  const DualConstants a = ComputeDualConstants(*p, 3.0);
  const DualConstants b = ComputeDualConstants(*p, 3.0);
  EXPECT_EQ(a.L_d, b.L_d);
  EXPECT_EQ(a.m_d, b.m_d);
}

TEST(EvalTest, Constraints) {
  {
    const QpInstance inst(MakeProblem(MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2),
                                      -VectorXd::Ones(2)),
                          VectorXd(0));
    EXPECT_EQ(EvalConstraints(inst, VectorXd::Zero(2)), -VectorXd::Ones(2));
  }
  {
    CondensedQp qp;
    qp.H = MatrixXd::Identity(2, 2);
    qp.h = MatrixXd::Zero(2, 2);
    qp.G = MatrixXd::Identity(2, 2);
    qp.E = MatrixXd::Identity(2, 2);
    qp.g = VectorXd::Zero(2);
    const QpInstance inst(std::make_shared<const Problem>(qp), (VectorXd(2) << 0, 1).finished());
    EXPECT_EQ(EvalConstraints(inst, (VectorXd(2) << 1, 0).finished()), VectorXd::Ones(2));
  }
}

TEST(EvalTest, Objective) {
  const QpInstance inst(MakeProblem(MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2),
                                    -VectorXd::Ones(2)),
                        VectorXd(0));
  EXPECT_EQ(EvalObjective(inst, (VectorXd(2) << 3, 4).finished()), 12.5);
  EXPECT_EQ(EvalObjective(inst, VectorXd::Zero(2)), 0.0);
}

// Scalar expansion of 1/2 sum_ij z_i H_ij z_j + sum_i (sum_k h_ik x_k) z_i.
TEST(EvalTest, ObjectiveMatchesScalarExpansion) {
  std::mt19937 gen(19);
  for (int trial = 0; trial < 30; ++trial) {
    const auto ri = testing::MakeRandomInstance(gen, 5, 4);
    const QpInstance inst = ri.inst();
    const VectorXd z = RandomVector(gen, 5);
    const CondensedQp& qp = inst.data();
    double expected = 0;
    for (Index i = 0; i < 5; ++i) {
      for (Index j = 0; j < 5; ++j) expected += 0.5 * z[i] * qp.H(i, j) * z[j];
      for (Index k = 0; k < qp.n_x(); ++k) expected += qp.h(i, k) * ri.x[k] * z[i];
    }
    EXPECT_LE(std::abs(EvalObjective(inst, z) - expected), 1e-12 * (1 + std::abs(expected)));
  }
}

TEST(ProjectNonnegTest, Examples) {
  EXPECT_EQ(ProjectNonneg((VectorXd(2) << -1, 2).finished()), (VectorXd(2) << 0, 2).finished());
  EXPECT_EQ(ProjectNonneg(VectorXd::Zero(2)), VectorXd::Zero(2));
}

TEST(ProjectNonnegTest, IdempotentAndNonexpansive) {
  std::mt19937 gen(23);
  for (int trial = 0; trial < 200; ++trial) {
    const VectorXd a = RandomVector(gen, 7);
    const VectorXd b = RandomVector(gen, 7);
    const VectorXd pa = ProjectNonneg(a);
    EXPECT_EQ(ProjectNonneg(pa), pa);
    EXPECT_TRUE((pa.array() >= 0).all());
    EXPECT_LE((pa - ProjectNonneg(b)).norm(), (a - b).norm() + 1e-15);
  }
}

}  // namespace
}  // namespace hyqp
