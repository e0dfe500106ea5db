#include "kldobs/adversary.hpp"

#include <charconv>
#include <cmath>

#include "kldobs/error.hpp"

namespace kldobs {

std::string_view to_string(WeightKind kind) {
  switch (kind) {
    case WeightKind::kStateShift: return "state-shift";
    case WeightKind::kEstimationError: return "estimation-error";
    case WeightKind::kCustom: return "custom";
  }
  return "custom";
}

ImpactWeight ImpactWeight::custom(const Matrix& w, WeightKind kind) {
  numkit::require_symmetric(w, "impact weight W");
  ImpactWeight out;
  out.w = numkit::symmetrize(w);
  out.r_w = numkit::psd_factor(out.w);
  out.kind = kind;
  return out;
}

ImpactWeight impact_weight_state_shift(const LtiSystem& sys, const Matrix& controller_gain) {
  if (controller_gain.rows() != sys.n_u() || controller_gain.cols() != sys.n_y()) {
    raise(ErrorKind::kDimension, "controller gain K must be n_u x n_y");
  }
  const Matrix closed = sys.a() + sys.b() * controller_gain * sys.c();
  Eigen::FullPivLU<Matrix> lu(Matrix::Identity(sys.n_x(), sys.n_x()) - closed);
  if (!lu.isInvertible() || lu.rcond() < 1e-13) {
    raise(ErrorKind::kMarginalStability, "I - (A + BKC) is singular");
  }
  const Matrix g = lu.solve(sys.b() * controller_gain);
  return ImpactWeight::custom(numkit::symmetrize(g.transpose() * g), WeightKind::kStateShift);
}

ImpactWeight impact_weight_estimation_error(const LtiSystem& sys, const ObserverGain& gain) {
  require_stable(gain);
  const Matrix f = sys.a() - gain.l * sys.c();
  const Matrix g = -Eigen::PartialPivLU<Matrix>(Matrix::Identity(sys.n_x(), sys.n_x()) - f).solve(gain.l);
  return ImpactWeight::custom(numkit::symmetrize(g.transpose() * g), WeightKind::kEstimationError);
}

std::string Instant::label() const {
  switch (kind) {
    case Kind::kOnset: return "onset";
    case Kind::kOneStep: return "one-step";
    case Kind::kSteady: return "steady";
    case Kind::kFinite: return std::to_string(k);
  }
  return "onset";
}

Instant parse_instant(std::string_view text) {
  if (text == "onset" || text == "0") return Instant::onset();
  if (text == "one-step" || text == "1") return Instant::one_step();
  if (text == "steady" || text == "inf") return Instant::steady();
  int k = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), k);
  if (ec != std::errc() || ptr != text.data() + text.size() || k < 0) {
    raise(ErrorKind::kDomain, "unknown instant '" + std::string(text) + "'");
  }
  return Instant::at(k);
}

Matrix impact_gamma(const AttackMatrix& attack, const ImpactWeight& w) {
  if (w.w.rows() != attack.n_y()) raise(ErrorKind::kDimension, "impact weight must be n_y x n_y");
  return numkit::symmetrize(attack.d_a().transpose() * w.w * attack.d_a());
}

namespace {

Matrix phi_at(const LtiSystem& sys, const ObserverGain& gain, Instant instant) {
  switch (instant.kind) {
    case Instant::Kind::kOnset: return Matrix::Identity(sys.n_y(), sys.n_y());
    case Instant::Kind::kOneStep: return transition_phi(sys, gain, 1);
    case Instant::Kind::kSteady: return transition_phi_steady(sys, gain);
    case Instant::Kind::kFinite: return transition_phi(sys, gain, instant.k);
  }
  return Matrix::Identity(sys.n_y(), sys.n_y());
}

}  // namespace

Matrix kld_psi(const LtiSystem& sys, const ObserverGain& gain, const AttackMatrix& attack,
               Instant instant) {
  if (attack.n_y() != sys.n_y()) raise(ErrorKind::kDimension, "attack matrix rows != n_y");
  const ResidualModel rm = residual_covariance(sys, gain);
  const Matrix pd = phi_at(sys, gain, instant) * attack.d_a();
  return numkit::symmetrize(0.5 * pd.transpose() * rm.sigma_r_inv * pd);
}

double detectability(const LtiSystem& sys, const ObserverGain& gain, const AttackMatrix& attack,
                     const ImpactWeight& w, Instant instant) {
  const Matrix gamma = impact_gamma(attack, w);
  return numkit::smallest_generalized_eigenpair(kld_psi(sys, gain, attack, instant), gamma).value;
}

AttackVector worst_case_attack(const LtiSystem& sys, const ObserverGain& gain,
                               const AttackMatrix& attack, const ImpactWeight& w, Instant instant,
                               double eps) {
  const Matrix gamma = impact_gamma(attack, w);
  const Matrix psi = kld_psi(sys, gain, attack, instant);
  const auto pair = numkit::smallest_generalized_eigenpair(psi, gamma, eps);
  AttackVector out;
  out.a_bar = pair.vector;
  out.impact = pair.vector.dot(gamma * pair.vector);
  out.kld_at_eval = pair.vector.dot(psi * pair.vector);
  out.eval_instant = instant;
  out.gamma_rank = pair.gamma_rank;
  out.reduced = pair.reduced;
  return out;
}

double kld_at(const LtiSystem& sys, const ObserverGain& gain, const AttackSchedule& schedule, int k) {
  if (k < 0) raise(ErrorKind::kDomain, "time index must be >= 0");
  const ResidualModel rm = residual_covariance(sys, gain);
  const Vector r = mean_residual(sys, gain, schedule, k + 1).back();
  return 0.5 * r.dot(rm.sigma_r_inv * r);
}

AttackVector random_impact_attack(const AttackMatrix& attack, const ImpactWeight& w, double eps,
                                  RandomStream& stream) {
  if (!(eps > 0.0)) raise(ErrorKind::kDomain, "eps must be positive");
  const Matrix gamma = impact_gamma(attack, w);
  Eigen::SelfAdjointEigenSolver<Matrix> es(gamma);
  const double gnorm = es.eigenvalues().cwiseAbs().maxCoeff();
  if (gnorm == 0.0) raise(ErrorKind::kDegenerateImpact, "impact matrix Gamma is zero");
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    if (es.eigenvalues()(i) > numkit::kSingularPencilTol * gnorm) keep.push_back(i);
  }
  Vector a = Vector::Zero(gamma.rows());
  double norm2 = 0.0;
  while (!(norm2 > 0.0)) {
    a.setZero();
    for (auto i : keep) a += stream.standard_normal() * es.eigenvectors().col(i);
    norm2 = a.dot(gamma * a);
  }
  a *= std::sqrt(eps / norm2);
  AttackVector out;
  out.a_bar = a;
  out.impact = a.dot(gamma * a);
  out.gamma_rank = static_cast<int>(keep.size());
  out.reduced = out.gamma_rank < gamma.rows();
  return out;
}

AttackVector evaluate_attack(const LtiSystem& sys, const ObserverGain& gain,
                             const AttackMatrix& attack, const ImpactWeight& w, const Vector& a_bar,
                             Instant instant) {
  if (a_bar.size() != attack.n_a()) raise(ErrorKind::kDimension, "attack vector length != n_a");
  const Matrix gamma = impact_gamma(attack, w);
  const Matrix psi = kld_psi(sys, gain, attack, instant);
  AttackVector out;
  out.a_bar = a_bar;
  out.impact = a_bar.dot(gamma * a_bar);
  out.kld_at_eval = a_bar.dot(psi * a_bar);
  out.eval_instant = instant;
  return out;
}

}  // namespace kldobs
