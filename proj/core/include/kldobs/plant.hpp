#pragma once

#include <functional>
#include <vector>

#include "kldobs/attack_model.hpp"
#include "kldobs/numkit.hpp"
#include "kldobs/random.hpp"

namespace kldobs {

/// Discrete-time stochastic LTI plant
///   x(k+1) = A x(k) + B u(k) + B_w w(k)
///   y(k)   = C x(k) + D_w w(k) + y_a(k),   w(k) ~ N(0, I).
class LtiSystem {
 public:
  /// Validates dimension consistency and finiteness (kDimension / kNonFinite).
  LtiSystem(Matrix a, Matrix b, Matrix c, Matrix b_omega, Matrix d_omega);

  const Matrix& a() const noexcept { return a_; }
  const Matrix& b() const noexcept { return b_; }
  const Matrix& c() const noexcept { return c_; }
  const Matrix& b_omega() const noexcept { return b_omega_; }
  const Matrix& d_omega() const noexcept { return d_omega_; }

  int n_x() const noexcept { return static_cast<int>(a_.rows()); }
  int n_u() const noexcept { return static_cast<int>(b_.cols()); }
  int n_y() const noexcept { return static_cast<int>(c_.rows()); }
  int n_w() const noexcept { return static_cast<int>(b_omega_.cols()); }

  /// True iff some eigenvalue of A lies within 1e-8 of 1.
  bool has_unit_eigenvalue() const noexcept { return unit_eigenvalue_; }

 private:
  Matrix a_, b_, c_, b_omega_, d_omega_;
  bool unit_eigenvalue_ = false;
};

/// Luenberger gain L (n_x x n_y) together with rho(A - LC).
struct ObserverGain {
  Matrix l;
  double closed_loop_radius = 0.0;

  static ObserverGain make(const LtiSystem& sys, Matrix l);
  bool stable() const noexcept { return closed_loop_radius < 1.0; }
};

/// Throws kInstability unless rho(A - LC) < 1.
void require_stable(const ObserverGain& gain);

/// Steady-state attack-free residual statistics of an observer.
struct ResidualModel {
  Matrix sigma_xtilde;
  Matrix sigma_r;
  Matrix sigma_r_inv;
};

/// Steady-state estimation-error covariance:
/// Sigma = (A-LC) Sigma (A-LC)^T + (B_w - L D_w)(B_w - L D_w)^T.
Matrix error_covariance(const LtiSystem& sys, const ObserverGain& gain);

/// Sigma_r = C Sigma C^T + D_w D_w^T and its inverse; kDegenerateNoise if
/// Sigma_r is singular.
ResidualModel residual_covariance(const LtiSystem& sys, const ObserverGain& gain);

/// Phi(k, L) = I - C sum_{l<k} (A-LC)^{k-l-1} L, with Phi(0, L) = I.
Matrix transition_phi(const LtiSystem& sys, const ObserverGain& gain, int k);

/// All of Phi(0..k_max, L) via Phi(k+1) = Phi(k) - C (A-LC)^k L.
std::vector<Matrix> transition_phi_series(const LtiSystem& sys, const ObserverGain& gain, int k_max);

/// M = C (I - A)^{-1}; kLemmaInapplicable when A has a unit eigenvalue.
Matrix steady_input_map(const LtiSystem& sys);

/// Phi(inf, L) = (I + M L)^{-1}.
Matrix transition_phi_steady(const LtiSystem& sys, const ObserverGain& gain);

struct Trace {
  int horizon = 0;
  int attack_onset = -1;  ///< -1 when no attack was scheduled
  std::vector<Vector> states;
  std::vector<Vector> estimates;
  std::vector<Vector> outputs;
  std::vector<Vector> residuals;
};

/// u(k) = policy(k, xhat(k)). The residual is independent of u.
using InputPolicy = std::function<Vector(int, const Vector&)>;

/// Forward simulation of plant and observer driven by one shared noise
/// realization. The run starts in the stationary regime: xhat(0) = 0 and
/// x(0) ~ N(0, Sigma_xtilde). Draw order: n_x values for x(0), then n_w
/// values per step.
Trace simulate(const LtiSystem& sys, const ObserverGain& gain, const AttackSchedule& schedule,
               int horizon, RandomStream& stream, const InputPolicy& input_policy = {});

/// Noise-free residual response to the scheduled bias, r_a(0..horizon-1).
std::vector<Vector> mean_residual(const LtiSystem& sys, const ObserverGain& gain,
                                  const AttackSchedule& schedule, int horizon);

}  // namespace kldobs
