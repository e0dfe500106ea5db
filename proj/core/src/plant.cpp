#include "kldobs/plant.hpp"

#include <cmath>
#include <string>

#include "kldobs/error.hpp"

namespace kldobs {

namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) raise(ErrorKind::kNonFinite, std::string(what) + " has NaN/Inf entries");
}

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    raise(ErrorKind::kDimension, std::string(what) + " is " + std::to_string(m.rows()) + "x" +
                                     std::to_string(m.cols()) + ", expected " +
                                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

}  // namespace

LtiSystem::LtiSystem(Matrix a, Matrix b, Matrix c, Matrix b_omega, Matrix d_omega)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), b_omega_(std::move(b_omega)),
      d_omega_(std::move(d_omega)) {
  if (a_.rows() < 1 || a_.rows() != a_.cols()) raise(ErrorKind::kDimension, "A must be square and non-empty");
  const auto nx = a_.rows();
  if (c_.rows() < 1) raise(ErrorKind::kDimension, "C must have at least one row");
  require_shape(b_, nx, b_.cols(), "B");
  require_shape(c_, c_.rows(), nx, "C");
  require_shape(b_omega_, nx, b_omega_.cols(), "B_omega");
  require_shape(d_omega_, c_.rows(), b_omega_.cols(), "D_omega");
  require_finite(a_, "A");
  require_finite(b_, "B");
  require_finite(c_, "C");
  require_finite(b_omega_, "B_omega");
  require_finite(d_omega_, "D_omega");

  Eigen::EigenSolver<Matrix> es(a_, false);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    if (std::abs(es.eigenvalues()(i) - std::complex<double>(1.0, 0.0)) < 1e-8) unit_eigenvalue_ = true;
  }
}

ObserverGain ObserverGain::make(const LtiSystem& sys, Matrix l) {
  require_shape(l, sys.n_x(), sys.n_y(), "observer gain L");
  require_finite(l, "observer gain L");
  ObserverGain g;
  g.closed_loop_radius = numkit::spectral_radius(sys.a() - l * sys.c());
  g.l = std::move(l);
  return g;
}

void require_stable(const ObserverGain& gain) {
  if (!gain.stable()) {
    raise(ErrorKind::kInstability,
          "closed-loop spectral radius " + std::to_string(gain.closed_loop_radius) + " >= 1");
  }
}

Matrix error_covariance(const LtiSystem& sys, const ObserverGain& gain) {
  require_stable(gain);
  const Matrix f = sys.a() - gain.l * sys.c();
  const Matrix g = sys.b_omega() - gain.l * sys.d_omega();
  return numkit::solve_discrete_lyapunov(f, g * g.transpose());
}

ResidualModel residual_covariance(const LtiSystem& sys, const ObserverGain& gain) {
  ResidualModel m;
  m.sigma_xtilde = error_covariance(sys, gain);
  m.sigma_r = numkit::symmetrize(sys.c() * m.sigma_xtilde * sys.c().transpose() +
                                 sys.d_omega() * sys.d_omega().transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.sigma_r, Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().maxCoeff();
  if (!(es.eigenvalues()(0) > 1e-12 * std::max(1.0, lmax))) {
    raise(ErrorKind::kDegenerateNoise, "residual covariance is singular");
  }
  m.sigma_r_inv = numkit::spd_inverse(m.sigma_r);
  return m;
}

std::vector<Matrix> transition_phi_series(const LtiSystem& sys, const ObserverGain& gain, int k_max) {
  if (k_max < 0) raise(ErrorKind::kDomain, "transition index must be >= 0");
  const Matrix f = sys.a() - gain.l * sys.c();
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(k_max) + 1);
  out.push_back(Matrix::Identity(sys.n_y(), sys.n_y()));
  Matrix fk_l = gain.l;  // (A-LC)^k L
  for (int k = 0; k < k_max; ++k) {
    out.push_back(out.back() - sys.c() * fk_l);
    fk_l = f * fk_l;
  }
  return out;
}

Matrix transition_phi(const LtiSystem& sys, const ObserverGain& gain, int k) {
  return transition_phi_series(sys, gain, k).back();
}

Matrix steady_input_map(const LtiSystem& sys) {
  if (sys.has_unit_eigenvalue()) {
    raise(ErrorKind::kLemmaInapplicable, "A has an eigenvalue at 1; steady-state map undefined");
  }
  const Matrix eye = Matrix::Identity(sys.n_x(), sys.n_x());
  Eigen::PartialPivLU<Matrix> lu(eye - sys.a());
  return sys.c() * lu.inverse();
}

Matrix transition_phi_steady(const LtiSystem& sys, const ObserverGain& gain) {
  require_stable(gain);
  const Matrix m = steady_input_map(sys);
  const Matrix s = Matrix::Identity(sys.n_y(), sys.n_y()) + m * gain.l;
  Eigen::FullPivLU<Matrix> lu(s);
  if (!lu.isInvertible() || lu.rcond() < 1e-13) {
    raise(ErrorKind::kNumericalSingularity, "I + M L is singular");
  }
  return lu.inverse();
}

Trace simulate(const LtiSystem& sys, const ObserverGain& gain, const AttackSchedule& schedule,
               int horizon, RandomStream& stream, const InputPolicy& input_policy) {
  require_stable(gain);
  if (horizon < 1) raise(ErrorKind::kDomain, "horizon must be >= 1");

  const Matrix sigma = error_covariance(sys, gain);
  const Matrix root = numkit::psd_factor(sigma);  // root^T root = sigma
  const std::vector<Vector> ya = schedule.injections(horizon, sys.n_y());

  Trace t;
  t.horizon = horizon;
  t.attack_onset = schedule.kind == ScheduleKind::kNone ? -1 : schedule.onset;
  t.states.reserve(static_cast<std::size_t>(horizon));
  t.estimates.reserve(static_cast<std::size_t>(horizon));
  t.outputs.reserve(static_cast<std::size_t>(horizon));
  t.residuals.reserve(static_cast<std::size_t>(horizon));

  Vector x = root.transpose() * numkit::sample_standard_normal(stream, sys.n_x());
  Vector xhat = Vector::Zero(sys.n_x());
  for (int k = 0; k < horizon; ++k) {
    const Vector w = numkit::sample_standard_normal(stream, sys.n_w());
    const Vector u = input_policy ? input_policy(k, xhat) : Vector::Zero(sys.n_u());
    const Vector y = sys.c() * x + sys.d_omega() * w + ya[static_cast<std::size_t>(k)];
    const Vector r = y - sys.c() * xhat;
    t.states.push_back(x);
    t.estimates.push_back(xhat);
    t.outputs.push_back(y);
    t.residuals.push_back(r);
    x = sys.a() * x + sys.b() * u + sys.b_omega() * w;
    xhat = sys.a() * xhat + sys.b() * u + gain.l * r;
  }
  return t;
}

std::vector<Vector> mean_residual(const LtiSystem& sys, const ObserverGain& gain,
                                  const AttackSchedule& schedule, int horizon) {
  require_stable(gain);
  const Matrix f = sys.a() - gain.l * sys.c();
  const std::vector<Vector> ya = schedule.injections(horizon, sys.n_y());
  std::vector<Vector> out;
  out.reserve(ya.size());
  Vector e = Vector::Zero(sys.n_x());
  for (const Vector& inj : ya) {
    out.push_back(sys.c() * e + inj);
    e = f * e - gain.l * inj;
  }
  return out;
}

}  // namespace kldobs
