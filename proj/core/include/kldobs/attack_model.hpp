#pragma once

// Value types describing which sensors an attacker controls and how the
// bias is injected over time. Kept free of plant dependencies so the
// simulator can consume them directly.

#include <vector>

#include "kldobs/numkit.hpp"

namespace kldobs {

/// Compromised-sensor selector D_a (n_y x n_a): column i has a single 1 at
/// row indices[i] - 1.
class AttackMatrix {
 public:
  AttackMatrix() = default;

  /// indices are 1-based, strictly increasing and within [1, n_y];
  /// violations raise kStructure.
  AttackMatrix(std::vector<int> indices, int n_y);

  const std::vector<int>& indices() const noexcept { return indices_; }
  const Matrix& d_a() const noexcept { return d_a_; }
  int n_y() const noexcept { return static_cast<int>(d_a_.rows()); }
  int n_a() const noexcept { return static_cast<int>(d_a_.cols()); }

 private:
  std::vector<int> indices_;
  Matrix d_a_;
};

AttackMatrix build_attack_matrix(const std::vector<int>& indices, int n_y);

enum class ScheduleKind { kNone, kStep, kRamp };

/// Time profile of the injected bias y_a(k) = D_a a(k).
///  - step: a(k) = 0 for k < onset, a_bar afterwards;
///  - ramp: a(k) = 0 for k < onset, a(onset) = beta * a_bar and
///          a(k+1) = (1 - beta) a(k) + beta * a_bar.
struct AttackSchedule {
  ScheduleKind kind = ScheduleKind::kNone;
  AttackMatrix attack;
  Vector a_bar;
  int onset = 0;
  double beta = 0.0;

  static AttackSchedule none();
  static AttackSchedule step(AttackMatrix attack, Vector a_bar, int onset);
  static AttackSchedule ramp(AttackMatrix attack, Vector a_bar, int onset, double beta);

  /// y_a(0..horizon-1), each of length n_y.
  std::vector<Vector> injections(int horizon, int n_y) const;
};

}  // namespace kldobs
