#include <gtest/gtest.h>

#include <cmath>

#include "kldobs/adversary.hpp"
#include "kldobs/error.hpp"
#include "kldobs/synthesis.hpp"
#include "support/oracles.hpp"

using namespace kldobs;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

struct Thermal {
  LtiSystem sys = oracle::thermal();
  ObserverGain kal = kalman_gain(sys);
  ImpactWeight w = impact_weight_estimation_error(sys, kal);
};

const Thermal& thermal_fixture() {
  static const Thermal t;
  return t;
}

double angle_up_to_sign(const Vector& a, const Vector& b) {
  const double c = std::abs(a.normalized().dot(b.normalized()));
  return std::acos(std::min(1.0, c));
}

}  // namespace

TEST(AttackMatrix, Examples) {
  const AttackMatrix a({1, 3, 5}, 5);
  Matrix expected = Matrix::Zero(5, 3);
  expected(0, 0) = expected(2, 1) = expected(4, 2) = 1.0;
  EXPECT_EQ(a.d_a(), expected);
  EXPECT_EQ(build_attack_matrix({1, 2, 3, 4}, 4).d_a(), Matrix::Identity(4, 4));
  const AttackMatrix e2({2}, 3);
  EXPECT_EQ(e2.d_a(), (Matrix(3, 1) << 0, 1, 0).finished());
}

TEST(AttackMatrix, RejectsBadIndices) {
  for (const std::vector<int>& bad : {std::vector<int>{1, 1}, std::vector<int>{0}, std::vector<int>{6},
                                      std::vector<int>{3, 2}}) {
    try {
      AttackMatrix(bad, 5);
      ADD_FAILURE();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kStructure);
    }
  }
}

TEST(AttackSchedule, StepAndRampLaws) {
  const AttackMatrix att({2}, 2);
  const Vector a = Vector::Constant(1, 2.0);
  const auto step = AttackSchedule::step(att, a, 3).injections(6, 2);
  for (int k = 0; k < 6; ++k) EXPECT_EQ(step[static_cast<std::size_t>(k)](1), k < 3 ? 0.0 : 2.0);
  const double beta = 0.25;
  const auto ramp = AttackSchedule::ramp(att, a, 3, beta).injections(8, 2);
  double expect = beta * 2.0;
  for (int k = 0; k < 8; ++k) {
    if (k < 3) {
      EXPECT_EQ(ramp[static_cast<std::size_t>(k)].norm(), 0.0);
      continue;
    }
    EXPECT_NEAR(ramp[static_cast<std::size_t>(k)](1), expect, 1e-15);
    EXPECT_EQ(ramp[static_cast<std::size_t>(k)](0), 0.0);
    expect = (1.0 - beta) * expect + beta * 2.0;
  }
}

TEST(ImpactWeight, StateShift) {
  const LtiSystem sys(scalar(0.5), scalar(1.0), scalar(1.0), scalar(1.0), scalar(1.0));
  EXPECT_NEAR(impact_weight_state_shift(sys, scalar(0.25)).w(0, 0), 1.0, 1e-14);
  EXPECT_EQ(impact_weight_state_shift(sys, scalar(0.0)).w.norm(), 0.0);
  try {
    impact_weight_state_shift(sys, scalar(0.5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMarginalStability);
  }
  const LtiSystem th = oracle::thermal();
  oracle::Rng rng(3);
  const ImpactWeight w = impact_weight_state_shift(th, 0.05 * rng.matrix(4, 5));
  EXPECT_TRUE(numkit::is_psd(w.w, 1e-12));
  EXPECT_LE((w.r_w.transpose() * w.r_w - w.w).norm(), 1e-9 * (1.0 + w.w.norm()));
}

TEST(ImpactWeight, EstimationError) {
  const LtiSystem sys(scalar(0.5), scalar(1.0), scalar(1.0), scalar(1.0), scalar(0.0));
  EXPECT_NEAR(impact_weight_estimation_error(sys, ObserverGain::make(sys, scalar(0.2))).w(0, 0), 4.0 / 49.0, 1e-15);
  EXPECT_EQ(impact_weight_estimation_error(sys, ObserverGain::make(sys, scalar(0.0))).w.norm(), 0.0);
  try {
    impact_weight_estimation_error(sys, ObserverGain::make(sys, scalar(2.0)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInstability);
  }
}

TEST(ImpactWeight, CustomRejectsIndefinite) {
  try {
    ImpactWeight::custom((Matrix(2, 2) << 1, 0, 0, -1).finished());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNotPsd);
  }
}

TEST(Detectability, OnsetIsPencilOfInverseCovariance) {
  const Thermal& t = thermal_fixture();
  const AttackMatrix att({1, 3, 5}, 5);
  const ResidualModel m = residual_covariance(t.sys, t.kal);
  const Matrix psi0 = 0.5 * att.d_a().transpose() * m.sigma_r_inv * att.d_a();
  const Matrix gamma = impact_gamma(att, t.w);
  const double j = detectability(t.sys, t.kal, att, t.w, Instant::onset());
  EXPECT_NEAR(j, numkit::smallest_generalized_eigenpair(psi0, gamma).value, 1e-10 * j);
  EXPECT_NEAR(j, oracle::min_pencil_grid3(psi0, gamma), 1e-3 * j);
}

TEST(Detectability, ScalesInverselyWithWeight) {
  const Thermal& t = thermal_fixture();
  const AttackMatrix att({1, 2, 5}, 5);
  const ImpactWeight w2 = ImpactWeight::custom(2.0 * t.w.w);
  for (Instant in : {Instant::onset(), Instant::one_step(), Instant::steady(), Instant::at(7)}) {
    const double j = detectability(t.sys, t.kal, att, t.w, in);
    EXPECT_NEAR(detectability(t.sys, t.kal, att, w2, in), 0.5 * j, 1e-9 * j);
  }
}

TEST(Detectability, ZeroWeightIsDegenerate) {
  const Thermal& t = thermal_fixture();
  try {
    detectability(t.sys, t.kal, AttackMatrix({1}, 5), ImpactWeight::custom(Matrix::Zero(5, 5)), Instant::onset());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerateImpact);
  }
}

TEST(WorstCaseAttack, ThermalKalmanOnsetDirection) {
  const Thermal& t = thermal_fixture();
  const AttackMatrix att({1, 3, 5}, 5);
  const AttackVector a = worst_case_attack(t.sys, t.kal, att, t.w, Instant::onset(), 1.0);
  const Vector reference = (Vector(3) << -0.9532, 0.0195, 0.0425).finished();
  EXPECT_LE(angle_up_to_sign(a.a_bar, reference), 1e-2);
  EXPECT_NEAR(a.impact, 1.0, 1e-8);
  EXPECT_NEAR(a.kld_at_eval, detectability(t.sys, t.kal, att, t.w, Instant::onset()), 1e-9);
}

TEST(WorstCaseAttack, FixedRandomReferenceHasUnitImpact) {
  const Thermal& t = thermal_fixture();
  const AttackMatrix att({1, 3, 5}, 5);
  const Vector ref = (Vector(3) << 0.8072, 0.0307, 0.7606).finished();
  const AttackVector e = evaluate_attack(t.sys, t.kal, att, t.w, ref, Instant::onset());
  EXPECT_NEAR(e.impact, 1.0, 5e-3);
}

TEST(WorstCaseAttack, SingularGammaRoutesThroughReduction) {
  const Thermal& t = thermal_fixture();
  const AttackMatrix att({1, 2, 3}, 5);
  Matrix w = Matrix::Zero(5, 5);
  w(0, 0) = 1.0;
  w(1, 1) = 2.0;
  const AttackVector a = worst_case_attack(t.sys, t.kal, att, ImpactWeight::custom(w), Instant::one_step(), 1.0);
  EXPECT_TRUE(a.reduced);
  EXPECT_EQ(a.gamma_rank, 2);
  EXPECT_NEAR(a.impact, 1.0, 1e-8);

  const LtiSystem toy(Matrix::Identity(2, 2) * 0.5, Matrix::Zero(2, 1), Matrix::Identity(2, 2),
                      Matrix::Identity(2, 4) * 0.1, (Matrix(2, 4) << 0, 0, 1, 0, 0, 0, 0, 1).finished());
  const ObserverGain g = ObserverGain::make(toy, Matrix::Zero(2, 2));
  const AttackVector e1 = worst_case_attack(toy, g, AttackMatrix({1, 2}, 2),
                                            ImpactWeight::custom((Matrix(2, 2) << 1, 0, 0, 0).finished()),
                                            Instant::onset(), 1.0);
  EXPECT_NEAR(std::abs(e1.a_bar(0)), 1.0, 1e-12);
  EXPECT_NEAR(e1.a_bar(1), 0.0, 1e-12);
}

TEST(WorstCaseAttack, SelfConsistencyAndDominance) {
  const Thermal& t = thermal_fixture();
  oracle::Rng rng(47);
  RandomStream stream(5);
  for (const std::vector<int>& idx : {std::vector<int>{1, 3, 5}, std::vector<int>{2, 4}, std::vector<int>{1, 2, 3, 4, 5}}) {
    const AttackMatrix att(idx, 5);
    const ObserverGain l = ObserverGain::make(t.sys, oracle::random_stable_gain(t.sys, t.kal.l, rng, 0.3));
    for (Instant in : {Instant::onset(), Instant::one_step(), Instant::steady()}) {
      const double eps = rng.uniform(0.5, 2.0);
      const AttackVector a = worst_case_attack(t.sys, l, att, t.w, in, eps);
      const double j = detectability(t.sys, l, att, t.w, in);
      EXPECT_NEAR(a.impact, eps, 1e-8);
      EXPECT_NEAR(a.kld_at_eval / eps, j, 1e-9 * (1.0 + j));

      const Matrix psi = kld_psi(t.sys, l, att, in);
      const Matrix gamma = impact_gamma(att, t.w);
      EXPECT_GE(numkit::min_eigenvalue(psi - (j - 1e-6) * gamma), -1e-12);
      EXPECT_LT(numkit::min_eigenvalue(psi - (j + 1e-6) * gamma), 0.0);

      for (int trial = 0; trial < 50; ++trial) {
        const AttackVector r = random_impact_attack(att, t.w, 1.0, stream);
        EXPECT_GE(r.a_bar.dot(psi * r.a_bar), j - 1e-9);
      }
    }
  }
}

TEST(KldAt, Examples) {
  const Thermal& t = thermal_fixture();
  const AttackMatrix att({1, 3, 5}, 5);
  EXPECT_EQ(kld_at(t.sys, t.kal, AttackSchedule::none(), 10), 0.0);

  const LtiSystem toy(scalar(0.5), scalar(1.0), scalar(0.0), Matrix::Zero(1, 1), scalar(1.0));
  EXPECT_NEAR(kld_at(toy, ObserverGain::make(toy, scalar(0.0)),
                     AttackSchedule::step(AttackMatrix({1}, 1), Vector::Constant(1, 1.0), 0), 0),
              0.5, 1e-15);

  const AttackVector a = worst_case_attack(t.sys, t.kal, att, t.w, Instant::steady());
  const auto sched = AttackSchedule::step(att, a.a_bar, 4);
  for (int k : {4, 5, 9, 30}) {
    const Matrix psi = kld_psi(t.sys, t.kal, att, Instant::at(k - 4));
    EXPECT_NEAR(kld_at(t.sys, t.kal, sched, k), a.a_bar.dot(psi * a.a_bar), 1e-12);
  }
}

TEST(KldAt, StepConvergesToSteadyForm) {
  const Thermal& t = thermal_fixture();
  const AttackMatrix att({1, 3, 5}, 5);
  const AttackVector a = worst_case_attack(t.sys, t.kal, att, t.w, Instant::steady());
  const auto sched = AttackSchedule::step(att, a.a_bar, 0);
  const double limit = a.kld_at_eval;
  double prev_gap = std::abs(kld_at(t.sys, t.kal, sched, 10) - limit);
  for (int k = 20; k <= 200; k += 10) {
    const double gap = std::abs(kld_at(t.sys, t.kal, sched, k) - limit);
    EXPECT_LE(gap, 10.0 * std::pow(t.kal.closed_loop_radius, k) * (1.0 + limit) + 1e-12);
    EXPECT_LE(gap, prev_gap + 1e-12);
    prev_gap = gap;
  }
}

TEST(RandomImpactAttack, ImpactAndDirection) {
  RandomStream stream(7);
  const AttackMatrix att({1, 2, 3}, 3);
  const ImpactWeight id = ImpactWeight::custom(Matrix::Identity(3, 3));
  const AttackVector u = random_impact_attack(att, id, 1.0, stream);
  EXPECT_NEAR(u.a_bar.norm(), 1.0, 1e-12);

  oracle::Rng rng(53);
  for (int trial = 0; trial < 20; ++trial) {
    const ImpactWeight w = ImpactWeight::custom(rng.psd(3, 1 + trial % 3));
    const double eps = rng.uniform(0.1, 3.0);
    EXPECT_NEAR(random_impact_attack(att, w, eps, stream).impact, eps, 1e-10 * eps);
  }
  try {
    random_impact_attack(att, ImpactWeight::custom(Matrix::Zero(3, 3)), 1.0, stream);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerateImpact);
  }
}
