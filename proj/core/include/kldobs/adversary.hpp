#pragma once

// Worst-case bias injection attacks: impact weights, the KLD pencil
// (Psi(k, L), Gamma) and its smallest generalized eigenpair.

#include <string>
#include <string_view>

#include "kldobs/attack_model.hpp"
#include "kldobs/plant.hpp"
#include "kldobs/random.hpp"

namespace kldobs {

enum class WeightKind { kStateShift, kEstimationError, kCustom };

std::string_view to_string(WeightKind kind);

/// Impact weight W (n_y x n_y, PSD) with factor R_W^T R_W = W.
struct ImpactWeight {
  Matrix w;
  Matrix r_w;
  WeightKind kind = WeightKind::kCustom;

  /// Checks symmetry/PSD (kNotPsd) and factors the matrix.
  static ImpactWeight custom(const Matrix& w, WeightKind kind = WeightKind::kCustom);
};

/// W = G^T G with G = (I - (A + B K C))^{-1} B K, the steady state shift of x
/// under output feedback u = K y. kMarginalStability if I - (A + BKC) is
/// singular.
ImpactWeight impact_weight_state_shift(const LtiSystem& sys, const Matrix& controller_gain);

/// W = G^T G with G = -(I - (A - LC))^{-1} L, the steady-state estimation
/// error induced by a constant sensor bias.
ImpactWeight impact_weight_estimation_error(const LtiSystem& sys, const ObserverGain& gain);

/// Evaluation instant of the detectability objective.
struct Instant {
  enum class Kind { kOnset, kOneStep, kSteady, kFinite };
  Kind kind = Kind::kOnset;
  int k = 0;  ///< used iff kind == kFinite

  static Instant onset() { return {Kind::kOnset, 0}; }
  static Instant one_step() { return {Kind::kOneStep, 1}; }
  static Instant steady() { return {Kind::kSteady, 0}; }
  static Instant at(int k) { return {Kind::kFinite, k}; }

  std::string label() const;
  friend bool operator==(const Instant&, const Instant&) = default;
};

/// Parses "onset", "one-step", "steady" or a non-negative integer.
Instant parse_instant(std::string_view text);

/// Gamma = D_a^T W D_a.
Matrix impact_gamma(const AttackMatrix& attack, const ImpactWeight& w);

/// Psi(k, L) = 1/2 D_a^T Phi(k,L)^T Sigma_r^{-1} Phi(k,L) D_a.
Matrix kld_psi(const LtiSystem& sys, const ObserverGain& gain, const AttackMatrix& attack,
               Instant instant);

/// J_k(L) = sigma_min(Psi(k, L), Gamma).
double detectability(const LtiSystem& sys, const ObserverGain& gain, const AttackMatrix& attack,
                     const ImpactWeight& w, Instant instant);

struct AttackVector {
  Vector a_bar;
  double impact = 0.0;       ///< a' Gamma a
  double kld_at_eval = 0.0;  ///< a' Psi a at eval_instant
  Instant eval_instant;
  int gamma_rank = 0;
  bool reduced = false;      ///< singular-Gamma branch used
};

/// Attack of impact eps with least KLD at `instant`.
AttackVector worst_case_attack(const LtiSystem& sys, const ObserverGain& gain,
                               const AttackMatrix& attack, const ImpactWeight& w, Instant instant,
                               double eps = 1.0);

/// 1/2 r_a(k)^T Sigma_r^{-1} r_a(k) for the noise-free residual of `schedule`.
double kld_at(const LtiSystem& sys, const ObserverGain& gain, const AttackSchedule& schedule, int k);

/// Random direction in range(Gamma) rescaled to impact eps. Draws one
/// standard normal per retained Gamma eigenvector.
AttackVector random_impact_attack(const AttackMatrix& attack, const ImpactWeight& w, double eps,
                                  RandomStream& stream);

/// Evaluates impact and KLD of a given vector (e.g. a fixed reference vector).
AttackVector evaluate_attack(const LtiSystem& sys, const ObserverGain& gain,
                             const AttackMatrix& attack, const ImpactWeight& w, const Vector& a_bar,
                             Instant instant);

}  // namespace kldobs
