#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "kldobs/error.hpp"
#include "kldobs/monitor.hpp"
#include "kldobs/synthesis.hpp"
#include "support/oracles.hpp"

using namespace kldobs;

namespace {

/// Two states, two sensors.
LtiSystem small_system() {
  return LtiSystem((Matrix(2, 2) << 0.9, 0.1, 0.0, 0.8).finished(), Matrix::Zero(2, 1),
                   (Matrix(2, 2) << 1.0, 0.0, 0.3, 1.0).finished(),
                   (Matrix(2, 4) << 0.3, 0, 0, 0, 0, 0.3, 0, 0).finished(),
                   (Matrix(2, 4) << 0, 0, 0.2, 0, 0, 0, 0, 0.2).finished());
}

double mean(const std::vector<double>& v, std::size_t from, std::size_t to) {
  return std::accumulate(v.begin() + static_cast<long>(from), v.begin() + static_cast<long>(to), 0.0) /
         static_cast<double>(to - from);
}

}  // namespace

TEST(Threshold, Examples) {
  EXPECT_NEAR(numkit::chi_square_quantile(0.005, 5), 16.7496, 1e-3);
  EXPECT_NEAR(numkit::chi_square_quantile(0.5, 2), 2.0 * std::log(2.0), 1e-10);
  for (int dof : {1, 2, 3, 5, 8}) {
    for (double xi : {0.001, 0.005, 0.05, 0.3}) {
      EXPECT_NEAR(numkit::chi_square_quantile(xi, dof), oracle::chi2_quantile(xi, dof), 1e-8);
    }
  }
}

TEST(Threshold, DecreasesWithFalseAlarmRate) {
  double prev = std::numeric_limits<double>::infinity();
  for (double xi : {1e-4, 1e-3, 5e-3, 1e-2, 0.1, 0.5, 0.9}) {
    const double t = numkit::chi_square_quantile(xi, 5);
    EXPECT_LT(t, prev);
    prev = t;
  }
}

TEST(Detector, ThresholdAndDomain) {
  const LtiSystem sys = small_system();
  const Detector det = make_detector(sys, kalman_gain(sys), 0.005);
  EXPECT_NEAR(det.threshold, numkit::chi_square_quantile(0.005, 2), 1e-12);
  EXPECT_EQ(det.n_y, 2);
  EXPECT_THROW(make_detector(sys, kalman_gain(sys), 0.0), Error);
  EXPECT_THROW(make_detector(sys, kalman_gain(sys), 1.0), Error);
}

TEST(Statistic, Examples) {
  const LtiSystem sys = small_system();
  const Detector det = make_detector(sys, kalman_gain(sys), 0.01);
  const EvalSeries zero = evaluate_residuals(det, {Vector::Zero(2), Vector::Zero(2)});
  for (double v : zero.statistic) EXPECT_EQ(v, 0.0);
  for (auto a : zero.alarm) EXPECT_EQ(a, 0);

  Detector unit = det;
  unit.residual_model.sigma_r = Matrix::Identity(2, 2);
  unit.residual_model.sigma_r_inv = Matrix::Identity(2, 2);
  const EvalSeries e1 = evaluate_residuals(unit, {Vector::Unit(2, 0), Vector::Constant(2, 10.0)});
  EXPECT_DOUBLE_EQ(e1.statistic[0], 1.0);
  EXPECT_EQ(e1.alarm[0], 0);
  EXPECT_DOUBLE_EQ(e1.statistic[1], 200.0);
  EXPECT_EQ(e1.alarm[1], 1);
}

TEST(Statistic, InvariantUnderOutputTransform) {
  const LtiSystem sys = small_system();
  const Matrix t = (Matrix(2, 2) << 2.0, 0.5, -0.3, 1.5).finished();
  const LtiSystem moved(sys.a(), sys.b(), t * sys.c(), sys.b_omega(), t * sys.d_omega());
  const ObserverGain l = kalman_gain(sys);
  const Detector d1 = make_detector(sys, l, 0.01);
  const Detector d2 = make_detector(moved, ObserverGain::make(moved, l.l * t.inverse()), 0.01);
  oracle::Rng rng(83);
  std::vector<Vector> r1, r2;
  for (int i = 0; i < 20; ++i) {
    r1.push_back(rng.matrix(2, 1));
    r2.push_back(t * r1.back());
  }
  const EvalSeries e1 = evaluate_residuals(d1, r1), e2 = evaluate_residuals(d2, r2);
  for (int i = 0; i < 20; ++i) EXPECT_NEAR(e1.statistic[i], e2.statistic[i], 1e-9 * (1.0 + e1.statistic[i]));
}

TEST(KldSeries, StepValues) {
  const LtiSystem sys = small_system();
  const ObserverGain l = kalman_gain(sys);
  const AttackMatrix att({2}, 2);
  const Vector a = Vector::Constant(1, 0.7);
  const std::vector<double> d = kld_series(sys, l, AttackSchedule::step(att, a, 10), 40);
  ASSERT_EQ(d.size(), 40u);
  for (int k = 0; k < 10; ++k) EXPECT_EQ(d[k], 0.0);
  const Vector ya = att.d_a() * a;
  const Matrix sinv = residual_covariance(sys, l).sigma_r_inv;
  EXPECT_NEAR(d[10], 0.5 * ya.dot(sinv * ya), 1e-12);
  const Vector r1 = transition_phi(sys, l, 1) * ya;
  EXPECT_NEAR(d[11], 0.5 * r1.dot(sinv * r1), 1e-12);
  for (int k = 0; k < 40; ++k) EXPECT_NEAR(d[k], kld_at(sys, l, AttackSchedule::step(att, a, 10), k), 1e-12);
}

TEST(KldSeries, RampApproachesSteadyForm) {
  const LtiSystem sys = small_system();
  const ObserverGain l = kalman_gain(sys);
  const AttackMatrix att({1, 2}, 2);
  const Vector a = (Vector(2) << 0.4, -0.9).finished();
  const std::vector<double> d = kld_series(sys, l, AttackSchedule::ramp(att, a, 5, 0.01), 3005);
  const Vector rinf = transition_phi_steady(sys, l) * att.d_a() * a;
  const double limit = 0.5 * rinf.dot(residual_covariance(sys, l).sigma_r_inv * rinf);
  EXPECT_NEAR(d.back(), limit, 1e-4);
  const Vector y0 = att.d_a() * (0.01 * a);
  EXPECT_NEAR(d[5], 0.5 * y0.dot(residual_covariance(sys, l).sigma_r_inv * y0), 1e-14);
}

TEST(MonteCarlo, DeterministicAndWorkerIndependent) {
  const LtiSystem sys = small_system();
  const Detector det = make_detector(sys, kalman_gain(sys), 0.01);
  const AttackSchedule sched = AttackSchedule::step(AttackMatrix({1}, 2), Vector::Constant(1, 0.5), 20);
  const McReport a = monte_carlo_detection(sys, det, sched, 60, 200, 11, 1);
  const McReport b = monte_carlo_detection(sys, det, sched, 60, 200, 11, 4);
  const McReport c = monte_carlo_detection(sys, det, sched, 60, 200, 11, 0);
  EXPECT_EQ(a.detection_probability, b.detection_probability);
  EXPECT_EQ(a.mean_statistic, b.mean_statistic);
  EXPECT_EQ(a.statistic_variance, b.statistic_variance);
  EXPECT_EQ(a.mean_statistic, c.mean_statistic);
  const McReport other = monte_carlo_detection(sys, det, sched, 60, 200, 12, 2);
  EXPECT_NE(a.mean_statistic, other.mean_statistic);
  EXPECT_EQ(a.trials, 200);
  EXPECT_EQ(a.onset, 20);
  ASSERT_EQ(a.detection_probability.size(), 60u);
}

TEST(MonteCarlo, TrialMatchesDirectSimulation) {
  const LtiSystem sys = small_system();
  const Detector det = make_detector(sys, kalman_gain(sys), 0.01);
  const AttackSchedule sched = AttackSchedule::none();
  const McReport one = monte_carlo_detection(sys, det, sched, 30, 1, 99, 1);
  RandomStream stream(derive_seed(99, 0));
  const Trace tr = simulate(sys, det.gain, sched, 30, stream);
  const EvalSeries e = mahalanobis_series(det, tr);
  for (int k = 0; k < 30; ++k) EXPECT_DOUBLE_EQ(one.mean_statistic[k], e.statistic[k]);
}

TEST(MonteCarlo, FalseAlarmCalibration) {
  const LtiSystem sys = small_system();
  const double xi = 0.01;
  const Detector det = make_detector(sys, kalman_gain(sys), xi);
  const McReport r = monte_carlo_detection(sys, det, AttackSchedule::none(), 200, 500, 3);
  const double rate = mean(r.detection_probability, 0, r.detection_probability.size());
  const double se = std::sqrt(xi * (1.0 - xi) / (200.0 * 500.0));
  EXPECT_NEAR(rate, xi, 4.0 * se);
  const double m = mean(r.mean_statistic, 0, r.mean_statistic.size());
  EXPECT_NEAR(m, 2.0, 4.0 * std::sqrt(4.0 / (200.0 * 500.0)));
}

TEST(MonteCarlo, MeanShiftIdentity) {
  const LtiSystem sys = small_system();
  const ObserverGain l = kalman_gain(sys);
  const Detector det = make_detector(sys, l, 0.01);
  const AttackSchedule sched = AttackSchedule::step(AttackMatrix({1, 2}, 2), (Vector(2) << 0.3, 0.2).finished(), 10);
  const int trials = 4000;
  const McReport r = monte_carlo_detection(sys, det, sched, 60, trials, 21);
  const std::vector<double> d = kld_series(sys, l, sched, 60);
  for (int k : {10, 11, 15, 30, 59}) {
    const double expected = 2.0 + 2.0 * d[k];
    const double se = std::sqrt(2.0 * (2.0 + 4.0 * d[k]) / trials);
    EXPECT_NEAR(r.mean_statistic[k], expected, 4.0 * se) << "k = " << k;
    EXPECT_NEAR(r.statistic_variance[k], 2.0 * (2.0 + 4.0 * d[k]), 0.15 * 2.0 * (2.0 + 4.0 * d[k]));
  }
}
