#pragma once

// Chi-square residual evaluation, KLD time series and Monte Carlo detection
// probabilities.

#include <cstdint>
#include <vector>

#include "kldobs/plant.hpp"

namespace kldobs {

struct Detector {
  ObserverGain gain;
  ResidualModel residual_model;
  double false_alarm = 0.0;
  double threshold = 0.0;
  int n_y = 0;
};

/// threshold = chi_square_quantile(xi, n_y); Sigma_r^{-1} is cached.
Detector make_detector(const LtiSystem& sys, const ObserverGain& gain, double false_alarm);

struct EvalSeries {
  std::vector<double> statistic;    ///< I(k) = r' Sigma_r^{-1} r
  std::vector<std::uint8_t> alarm;  ///< I(k) > threshold
  double threshold = 0.0;
};

EvalSeries evaluate_residuals(const Detector& det, const std::vector<Vector>& residuals);
EvalSeries mahalanobis_series(const Detector& det, const Trace& trace);

/// D(k) = 1/2 rbar(k)' Sigma_r^{-1} rbar(k) from the noise-free residual.
std::vector<double> kld_series(const LtiSystem& sys, const ObserverGain& gain, const AttackSchedule& schedule,
                               int horizon);

struct McReport {
  int trials = 0;
  int horizon = 0;
  int onset = -1;
  std::uint64_t base_seed = 0;
  double threshold = 0.0;
  std::vector<double> detection_probability;
  std::vector<double> mean_statistic;
  std::vector<double> statistic_variance;  ///< unbiased sample variance of I(k)
};

inline constexpr int kDefaultTrials = 2000;

/// Trial t simulates with RandomStream(derive_seed(base_seed, t)). Trials
/// run on `workers` threads (0 = hardware concurrency); the report does not
/// depend on the worker count.
McReport monte_carlo_detection(const LtiSystem& sys, const Detector& det, const AttackSchedule& schedule,
                               int horizon, int trials = kDefaultTrials, std::uint64_t base_seed = 0,
                               int workers = 0);

}  // namespace kldobs
