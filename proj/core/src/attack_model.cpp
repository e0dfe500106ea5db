#include "kldobs/attack_model.hpp"

#include <string>

#include "kldobs/error.hpp"

namespace kldobs {

AttackMatrix::AttackMatrix(std::vector<int> indices, int n_y) : indices_(std::move(indices)) {
  if (n_y < 1) raise(ErrorKind::kStructure, "n_y must be positive");
  if (indices_.empty()) raise(ErrorKind::kStructure, "at least one compromised sensor is required");
  if (static_cast<int>(indices_.size()) > n_y) {
    raise(ErrorKind::kStructure, "more compromised sensors than outputs");
  }
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    const int j = indices_[i];
    if (j < 1 || j > n_y) {
      raise(ErrorKind::kStructure, "sensor index " + std::to_string(j) + " outside [1, " +
                                       std::to_string(n_y) + "]");
    }
    if (i > 0 && j <= indices_[i - 1]) {
      raise(ErrorKind::kStructure, "sensor indices must be strictly increasing (duplicate or "
                                   "unordered index " + std::to_string(j) + ")");
    }
  }
  d_a_ = Matrix::Zero(n_y, static_cast<Eigen::Index>(indices_.size()));
  for (std::size_t i = 0; i < indices_.size(); ++i) d_a_(indices_[i] - 1, static_cast<Eigen::Index>(i)) = 1.0;
}

AttackMatrix build_attack_matrix(const std::vector<int>& indices, int n_y) {
  return AttackMatrix(indices, n_y);
}

AttackSchedule AttackSchedule::none() { return {}; }

AttackSchedule AttackSchedule::step(AttackMatrix attack, Vector a_bar, int onset) {
  if (a_bar.size() != attack.n_a()) raise(ErrorKind::kDimension, "attack vector length != n_a");
  if (onset < 0) raise(ErrorKind::kDomain, "attack onset must be >= 0");
  AttackSchedule s;
  s.kind = ScheduleKind::kStep;
  s.attack = std::move(attack);
  s.a_bar = std::move(a_bar);
  s.onset = onset;
  return s;
}

AttackSchedule AttackSchedule::ramp(AttackMatrix attack, Vector a_bar, int onset, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) raise(ErrorKind::kDomain, "ramp rate beta must lie in [0, 1]");
  AttackSchedule s = step(std::move(attack), std::move(a_bar), onset);
  s.kind = ScheduleKind::kRamp;
  s.beta = beta;
  return s;
}

std::vector<Vector> AttackSchedule::injections(int horizon, int n_y) const {
  std::vector<Vector> out(static_cast<std::size_t>(std::max(horizon, 0)), Vector::Zero(n_y));
  if (kind == ScheduleKind::kNone) return out;
  if (attack.n_y() != n_y) raise(ErrorKind::kDimension, "attack matrix rows != n_y");
  const Matrix& d = attack.d_a();
  Vector a = Vector::Zero(a_bar.size());
  for (int k = onset; k < horizon; ++k) {
    if (kind == ScheduleKind::kStep) {
      a = a_bar;
    } else if (k == onset) {
      a = beta * a_bar;
    } else {
      a = (1.0 - beta) * a + beta * a_bar;
    }
    out[static_cast<std::size_t>(k)] = d * a;
  }
  return out;
}

}  // namespace kldobs
