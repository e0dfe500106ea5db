#include <gtest/gtest.h>

#include "kldobs/error.hpp"
#include "kldobs/sdp.hpp"
#include "kldobs/synthesis.hpp"
#include "support/oracles.hpp"

using namespace kldobs;
using namespace kldobs::sdp;

namespace {

MatExpr m1(const LinExpr& e) {
  MatExpr m(1, 1);
  m(0, 0) = e;
  return m;
}

LinExpr trace(const MatExpr& m) {
  LinExpr t;
  for (Eigen::Index i = 0; i < m.rows(); ++i) t += m(i, i);
  return t;
}

/// Random plant with n states, 2 outputs, process and measurement noise on
/// separate channels, and rho(A) drawn from [0.5, 1.3].
LtiSystem random_detectable(oracle::Rng& rng, int n) {
  Matrix a = rng.matrix(n, n);
  a *= rng.uniform(0.5, 1.3) / oracle::spectral_radius(a);
  const Matrix c = rng.matrix(2, n);
  Matrix bw = Matrix::Zero(n, n + 2), dw = Matrix::Zero(2, n + 2);
  bw.leftCols(n) = 0.3 * Matrix::Identity(n, n);
  dw.rightCols(2) = 0.3 * Matrix::Identity(2, 2);
  return LtiSystem(a, Matrix::Zero(n, 1), c, bw, dw);
}

}  // namespace

TEST(Sdp, ScalarUpperBound) {
  Problem p;
  const LinExpr l = p.add_scalar("lambda");
  p.add_lmi(m1(LinExpr(3.0) - l), "bound");
  p.maximize(l);
  const Solution s = p.solve();
  ASSERT_TRUE(s.optimal()) << s.message;
  EXPECT_NEAR(s.objective, 3.0, 1e-6);
  EXPECT_GE(s.min_eigenvalue, -1e-7);
}

TEST(Sdp, DiagonalLowerBound) {
  Problem p;
  const LinExpr x = p.add_scalar("x");
  MatExpr m(2, 2);
  m(0, 0) = x;
  m(1, 1) = LinExpr(1.0);
  p.add_lmi(m, "diag");
  p.minimize(x);
  const Solution s = p.solve();
  ASSERT_TRUE(s.optimal()) << s.message;
  EXPECT_NEAR(s.objective, 0.0, 1e-6);
}

TEST(Sdp, TwoByTwoDeterminant) {
  Problem p;
  const LinExpr t = p.add_scalar("t");
  MatExpr m(2, 2);
  m(0, 0) = LinExpr(1.0);
  m(1, 1) = LinExpr(1.0);
  m(0, 1) = t;
  m(1, 0) = t;
  p.add_lmi(m, "det");
  p.maximize(t);
  const Solution s = p.solve();
  ASSERT_TRUE(s.optimal()) << s.message;
  EXPECT_NEAR(s.objective, 1.0, 1e-6);
}

TEST(Sdp, InfeasibleWithCertificate) {
  Problem p;
  const LinExpr t = p.add_scalar("t");
  p.add_lmi(m1(t - 1.0), "lower");
  p.add_lmi(m1(-t), "upper");
  p.maximize(t);
  EXPECT_EQ(p.solve().status, Status::kInfeasible);
}

TEST(Sdp, Unbounded) {
  Problem p;
  const LinExpr t = p.add_scalar("t");
  p.add_lmi(m1(t), "nonneg");
  p.maximize(t);
  EXPECT_EQ(p.solve().status, Status::kUnbounded);
}

TEST(Sdp, MarginShiftsTheCone) {
  Problem p;
  const LinExpr l = p.add_scalar("lambda");
  p.add_lmi(m1(LinExpr(3.0) - l), "bound", 0.5);
  p.maximize(l);
  const Solution s = p.solve();
  ASSERT_TRUE(s.optimal());
  EXPECT_NEAR(s.objective, 2.5, 1e-6);
}

TEST(Sdp, MatrixVariableMinimumEigenvalue) {
  // max t s.t. S - t I >= 0 for fixed symmetric S has optimum lambda_min(S).
  oracle::Rng rng(59);
  const Matrix s = rng.psd(4, 4) - Matrix::Identity(4, 4);
  Problem p;
  const LinExpr t = p.add_scalar("t");
  p.add_lmi(MatExpr(s) - scale_matrix(t, Matrix::Identity(4, 4)), "shift");
  p.maximize(t);
  const Solution sol = p.solve();
  ASSERT_TRUE(sol.optimal());
  EXPECT_NEAR(sol.objective, numkit::min_eigenvalue(s), 1e-6 * (1.0 + std::abs(sol.objective)));
}

TEST(Sdp, SymmetricVariableRoundTrip) {
  // min trace(X) s.t. X >= B for B PSD gives X = B.
  oracle::Rng rng(61);
  const Matrix b = rng.psd(3, 3);
  Problem p;
  const MatExpr x = p.add_symmetric("X", 3);
  p.add_lmi(x - MatExpr(b), "above");
  p.minimize(trace(x));
  const Solution s = p.solve();
  ASSERT_TRUE(s.optimal());
  EXPECT_LT((p.value(s, "X") - b).norm(), 1e-5);
}

TEST(SdpModel, RejectsMalformedInput) {
  Problem p;
  const MatExpr r = p.add_matrix("R", 2, 3);
  try {
    p.add_lmi(r, "rect");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimension);
  }
  const MatExpr g = p.add_matrix("G", 2, 2);
  try {
    p.add_lmi(g, "asym");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNotSymmetric);
  }
  try {
    p.add_scalar("G");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidModel);
  }
}

TEST(StabilityRelaxation, FeasiblePointsAreStableAndSound) {
  oracle::Rng rng(67);
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const LtiSystem sys = random_detectable(rng, 2 + trial % 3);
    const int n = sys.n_x(), ny = sys.n_y();
    Problem p;
    const MatExpr pm = p.add_symmetric("P", n);
    const MatExpr z = p.add_symmetric("Z", ny);
    const MatExpr g = p.add_matrix("G", n, ny);
    add_stability_relaxation(p, sys, pm, z, g, 1e-8);
    p.add_lmi(MatExpr(Matrix(1e3 * Matrix::Identity(n, n))) - pm, "P-bound");
    p.maximize(trace(z));
    const Solution s = p.solve({1e-9, 1e-9, 150});
    ASSERT_TRUE(s.optimal()) << s.message;
    const Matrix pv = p.value(s, "P"), zv = p.value(s, "Z"), gv = p.value(s, "G");
    const ObserverGain l = ObserverGain::make(sys, pv.llt().solve(gv));
    EXPECT_LT(l.closed_loop_radius, 1.0);
    const ResidualModel m = residual_covariance(sys, l);
    EXPECT_GE(numkit::min_eigenvalue(m.sigma_r_inv - zv), -1e-7);
    ++checked;
  }
  EXPECT_EQ(checked, 20);
}

TEST(StabilityRelaxation, NoStabilizingGainIsInfeasible) {
  const LtiSystem sys(Matrix::Constant(1, 1, 1.2), Matrix::Zero(1, 1), Matrix::Zero(1, 1),
                      (Matrix(1, 2) << 1.0, 0.0).finished(), (Matrix(1, 2) << 0.0, 1.0).finished());
  Problem p;
  const MatExpr pm = p.add_symmetric("P", 1);
  const MatExpr z = p.add_symmetric("Z", 1);
  const MatExpr g = p.add_matrix("G", 1, 1);
  add_stability_relaxation(p, sys, pm, z, g, 1e-3);
  p.maximize(trace(z));
  EXPECT_EQ(p.solve().status, Status::kInfeasible);
}
