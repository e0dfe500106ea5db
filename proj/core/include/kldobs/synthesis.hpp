#pragma once

// Observer-gain synthesis for worst-case bias detectability: the Kalman
// baseline, LMI relaxations, and the bi-convex programs solved by
// alternating optimization (AO) and ADMM.

#include <limits>
#include <string>
#include <vector>

#include "kldobs/adversary.hpp"
#include "kldobs/plant.hpp"
#include "kldobs/sdp.hpp"

namespace kldobs {

/// Steady-state one-step predictor gain for correlated process/measurement
/// noise, by fixed-point iteration of the Riccati recursion. Throws
/// kDetectabilityAssumption when the recursion does not settle.
ObserverGain kalman_gain(const LtiSystem& sys, int max_iterations = 100000);

/// Prediction error covariance P of the Kalman recursion at convergence.
Matrix kalman_error_covariance(const LtiSystem& sys, int max_iterations = 100000);

/// The two block LMIs guaranteeing rho(A - LC) < 1 and Z <= Sigma_r^{-1}:
///   [[P, PA - GC, PB_w - GD_w], [*, P, 0], [*, *, I]] > 0
///   [[Z, ZC, ZD_w], [*, P, 0], [*, *, I]] > 0
/// with G = P L. Pass G either as a free variable (linearized form), as
/// P * L for a constant L, or as a constant P times a variable L.
std::vector<sdp::MatExpr> stability_relaxation_constraints(const LtiSystem& sys, const sdp::MatExpr& p,
                                                           const sdp::MatExpr& z, const sdp::MatExpr& g);

/// Adds both stability LMIs with strictness margin `margin`.
void add_stability_relaxation(sdp::Problem& problem, const LtiSystem& sys, const sdp::MatExpr& p,
                              const sdp::MatExpr& z, const sdp::MatExpr& g, double margin);

enum class Method { kKalman, kLmi, kAo, kAdmm, kBlend };

std::string_view to_string(Method method);
Method parse_method(std::string_view text);

enum class Initializer { kLmi, kKalman, kCustom };

/// ADMM starting point for the coupling variable Q (meant to equal P^{-1}).
enum class AdmmQ0 { kErrorCovariance, kInverseErrorCovariance };

inline std::vector<double> default_gamma_grid() { return {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3}; }

struct DesignConfig {
  std::vector<double> gamma_grid = default_gamma_grid();
  int max_iters = 50;
  double conv_tol = 1e-5;      ///< epsilon (AO) and epsilon_1 (ADMM) on ||L_i - L_{i-1}||_2
  double coupling_tol = 1e-5;  ///< epsilon_2 (ADMM) on ||[PQ QG] - [I L]||_2
  double admm_step = 1e4;      ///< eta
  AdmmQ0 admm_q0 = AdmmQ0::kErrorCovariance;
  double alpha = 0.5;          ///< blend weight on the one-step objective
  Initializer initializer = Initializer::kLmi;
  Matrix custom_gain;
  double strict_margin = 1e-8;
  sdp::SolverOptions solver{1e-9, 1e-10, 150};

  /// Throws kConfig on out-of-range fields.
  void validate() const;
};

struct GammaOutcome {
  double gamma = 0.0;
  std::string status;
  double lambda = std::numeric_limits<double>::quiet_NaN();
};

struct DesignReport {
  ObserverGain gain;
  Method method = Method::kKalman;
  /// "onset", "one-step", "steady" or "blend".
  std::string instant;
  std::vector<double> lambda_trace;
  double certified_lambda = 0.0;
  /// Detectability of the returned gain at the design instant (the
  /// alpha-weighted pair for blends).
  double exact_j = 0.0;
  double j_onset = std::numeric_limits<double>::quiet_NaN();
  double j_one_step = std::numeric_limits<double>::quiet_NaN();
  double j_steady = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  double wall_time_s = 0.0;
  std::string status = "ok";
  /// Why the iteration stopped: "converged", "max-iterations", "stationary"
  /// (a subproblem could not improve on the incumbent), "subproblem-failure",
  /// or "closed-form" for non-iterative designs.
  std::string termination = "closed-form";
  std::vector<std::string> warnings;
  /// Initializer chain actually taken, e.g. {"lmi: relaxation-infeasible", "kalman"}.
  std::vector<std::string> fallback;
  double gamma = std::numeric_limits<double>::quiet_NaN();
  std::vector<GammaOutcome> gamma_outcomes;
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double certified_lambda_one_step = std::numeric_limits<double>::quiet_NaN();
  double certified_lambda_steady = std::numeric_limits<double>::quiet_NaN();
  /// Last Step-2 multiplier of ADMM and the final coupling residual.
  double final_step_lambda = std::numeric_limits<double>::quiet_NaN();
  double coupling_residual = std::numeric_limits<double>::quiet_NaN();
};

DesignReport design_onset(const LtiSystem& sys, const AttackMatrix& attack, const ImpactWeight& weight);

/// One-step LMI relaxation: minimizes mu (lambda = 1/mu) per grid gamma.
DesignReport design_one_step_lmi(const LtiSystem& sys, const AttackMatrix& attack,
                                 const ImpactWeight& weight, const DesignConfig& cfg = {});

/// Steady-state LMI relaxation: maximizes lambda per grid gamma.
DesignReport design_steady_lmi(const LtiSystem& sys, const AttackMatrix& attack,
                               const ImpactWeight& weight, const DesignConfig& cfg = {});

/// Alternating optimization of the bi-convex one-step or steady program.
DesignReport design_biconvex_ao(const LtiSystem& sys, const AttackMatrix& attack,
                                const ImpactWeight& weight, Instant instant, const DesignConfig& cfg = {});

/// ADMM on the G = PL, Q = P^{-1} lifted bi-convex program.
DesignReport design_biconvex_admm(const LtiSystem& sys, const AttackMatrix& attack,
                                  const ImpactWeight& weight, Instant instant, const DesignConfig& cfg = {});

/// AO on alpha * lambda_1 + (1 - alpha) * lambda_inf over both constraint sets.
DesignReport design_blend(const LtiSystem& sys, const AttackMatrix& attack, const ImpactWeight& weight,
                          double alpha, const DesignConfig& cfg = {});

/// Dispatches on (method, instant). Onset always yields the Kalman design.
DesignReport design(const LtiSystem& sys, const AttackMatrix& attack, const ImpactWeight& weight,
                    Method method, Instant instant, const DesignConfig& cfg = {});

/// Step 1 of AO at a fixed gain: maximizes lambda over (P, Y, Z, lambda).
/// Returns NaN when the subproblem is not solved to optimality.
double certify_fixed_gain(const LtiSystem& sys, const AttackMatrix& attack, const ImpactWeight& weight,
                          const Matrix& l, Instant instant, const DesignConfig& cfg = {});

/// Recomputes rho(A - LC) and J at all instants from scratch.
void audit_report(DesignReport& report, const LtiSystem& sys, const AttackMatrix& attack,
                  const ImpactWeight& weight);

}  // namespace kldobs
