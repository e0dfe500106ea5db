#include "kldobs/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "kldobs/error.hpp"

namespace kldobs::numkit {

namespace {

std::string shape(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

// Canonical sign: entry of largest magnitude nonnegative.
void canonicalize_sign(Vector& v) {
  if (v.size() == 0) return;
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v(arg) < 0.0) v = -v;
}

}  // namespace

bool all_finite(const Matrix& m) { return m.allFinite(); }

bool is_symmetric(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  const double scale = 1.0 + m.cwiseAbs().maxCoeff();
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

void require_square_finite(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    raise(ErrorKind::kDimension, std::string(what) + " must be square, got " + shape(m));
  }
  if (!m.allFinite()) raise(ErrorKind::kNonFinite, std::string(what) + " has NaN/Inf entries");
}

void require_symmetric(const Matrix& m, const char* what) {
  require_square_finite(m, what);
  if (!is_symmetric(m)) raise(ErrorKind::kNotSymmetric, std::string(what) + " is not symmetric");
}

double spectral_radius(const Matrix& m) {
  require_square_finite(m, "spectral_radius input");
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) raise(ErrorKind::kNumericalFailure, "eigenvalue iteration failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix solve_discrete_lyapunov(const Matrix& f, const Matrix& q) {
  require_square_finite(f, "Lyapunov transition");
  require_symmetric(q, "Lyapunov forcing");
  if (f.rows() != q.rows()) {
    raise(ErrorKind::kDimension, "Lyapunov operands differ: " + shape(f) + " vs " + shape(q));
  }
  const double rho = spectral_radius(f);
  if (rho >= 1.0) {
    raise(ErrorKind::kInstability, "spectral radius " + std::to_string(rho) + " >= 1");
  }

  Matrix sigma = symmetrize(q);
  Matrix power = f;
  for (int k = 0; k < 200; ++k) {
    Matrix update = power * sigma * power.transpose();
    sigma += update;
    sigma = symmetrize(sigma);
    power = power * power;
    if (update.norm() <= 1e-12 * (1.0 + sigma.norm()) || power.norm() == 0.0) break;
  }
  // One fixed-point sweep removes the rounding accumulated by the squaring.
  sigma = symmetrize(f * sigma * f.transpose() + q);
  return sigma;
}

GeneralizedEigenpair smallest_generalized_eigenpair(const Matrix& psi, const Matrix& gamma,
                                                    double eps) {
  require_symmetric(psi, "psi");
  require_symmetric(gamma, "gamma");
  if (psi.rows() != gamma.rows()) {
    raise(ErrorKind::kDimension, "pencil operands differ: " + shape(psi) + " vs " + shape(gamma));
  }
  if (!(eps > 0.0) || !std::isfinite(eps)) raise(ErrorKind::kDomain, "eps must be positive");

  const Matrix gs = symmetrize(gamma);
  Eigen::SelfAdjointEigenSolver<Matrix> ges(gs);
  const Vector& lam = ges.eigenvalues();
  const double gnorm = lam.size() ? lam.cwiseAbs().maxCoeff() : 0.0;
  if (gnorm == 0.0) raise(ErrorKind::kDegenerateImpact, "impact matrix Gamma is zero");

  const double cutoff = kSingularPencilTol * gnorm;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    if (lam(i) > cutoff) keep.push_back(i);
  }
  if (keep.empty()) raise(ErrorKind::kDegenerateImpact, "impact matrix Gamma has no positive eigenvalue");

  double lam_min_kept = std::numeric_limits<double>::infinity();
  for (auto i : keep) lam_min_kept = std::min(lam_min_kept, lam(i));
  if (gnorm / lam_min_kept > kPencilConditionLimit) {
    raise(ErrorKind::kIllConditioned, "impact pencil eigenvalue ratio exceeds 1e12");
  }

  const Matrix ps = symmetrize(psi);
  GeneralizedEigenpair out;
  out.gamma_rank = static_cast<int>(keep.size());

  if (static_cast<Eigen::Index>(keep.size()) == gs.rows()) {
    // Definite pencil: Cholesky-based generalized solver.
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(ps, gs);
    if (solver.info() != Eigen::Success) {
      raise(ErrorKind::kNumericalFailure, "generalized eigensolver failed");
    }
    out.value = solver.eigenvalues()(0);
    out.vector = solver.eigenvectors().col(0);
  } else {
    // Singular Gamma: a = U_r b, minimize b' U_r' Psi U_r b s.t. b' Lambda b = eps.
    const Eigen::Index m = static_cast<Eigen::Index>(keep.size());
    Matrix ur(gs.rows(), m);
    Vector inv_sqrt(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      ur.col(j) = ges.eigenvectors().col(keep[j]);
      inv_sqrt(j) = 1.0 / std::sqrt(lam(keep[j]));
    }
    const Matrix reduced =
        symmetrize(inv_sqrt.asDiagonal() * (ur.transpose() * ps * ur) * inv_sqrt.asDiagonal());
    Eigen::SelfAdjointEigenSolver<Matrix> rs(reduced);
    out.value = rs.eigenvalues()(0);
    out.vector = ur * (inv_sqrt.asDiagonal() * rs.eigenvectors().col(0));
    out.reduced = true;
  }

  const double norm2 = out.vector.dot(gs * out.vector);
  out.vector *= std::sqrt(eps / norm2);
  canonicalize_sign(out.vector);
  return out;
}

double chi_square_survival(double x, int dof) {
  if (dof < 1) raise(ErrorKind::kDomain, "chi-square degrees of freedom must be >= 1");
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * x);
}

double chi_square_quantile(double false_alarm, int dof) {
  if (!(false_alarm > 0.0 && false_alarm < 1.0)) {
    raise(ErrorKind::kDomain, "false-alarm probability must lie in (0, 1)");
  }
  if (dof < 1) raise(ErrorKind::kDomain, "chi-square degrees of freedom must be >= 1");

  // Bracket by doubling, then bisect on the (decreasing) survival function.
  double lo = 0.0;
  double hi = static_cast<double>(dof);
  while (chi_square_survival(hi, dof) > false_alarm) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (chi_square_survival(mid, dof) > false_alarm) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-14 * std::max(1.0, hi)) break;
  }
  return 0.5 * (lo + hi);
}

Matrix psd_factor(const Matrix& w) {
  require_symmetric(w, "factor input");
  if (w.size() == 0) return w;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(w));
  Vector lam = es.eigenvalues();
  const double scale = lam.cwiseAbs().maxCoeff();
  if (lam(0) < -1e-9 * scale) {
    raise(ErrorKind::kNotPsd, "matrix has eigenvalue " + std::to_string(lam(0)));
  }
  lam = lam.cwiseMax(0.0).cwiseSqrt();
  return lam.asDiagonal() * es.eigenvectors().transpose();
}

double min_eigenvalue(const Matrix& s) {
  require_square_finite(s, "eigenvalue input");
  if (s.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(s), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

bool is_psd(const Matrix& s, double tol) {
  if (s.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(s), Eigen::EigenvaluesOnly);
  const Vector& lam = es.eigenvalues();
  const double norm = lam.cwiseAbs().maxCoeff();
  return lam(0) >= -tol * (1.0 + norm);
}

Matrix spd_inverse(const Matrix& s) {
  Eigen::LLT<Matrix> llt(symmetrize(s));
  if (llt.info() != Eigen::Success) {
    raise(ErrorKind::kNumericalSingularity, "matrix is not numerically positive definite");
  }
  return symmetrize(llt.solve(Matrix::Identity(s.rows(), s.cols())));
}

}  // namespace kldobs::numkit
