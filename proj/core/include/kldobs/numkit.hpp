#pragma once

// Dense linear-algebra, spectral and probability kernels shared by every
// other part of the library.

#include <Eigen/Dense>

namespace kldobs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace numkit {

/// Symmetry tolerance used across the library:
/// max |S(i,j) - S(j,i)| <= 1e-10 * (1 + max |S|).
inline constexpr double kSymmetryTol = 1e-10;

/// Eigenvalues of Gamma at or below this fraction of ||Gamma|| are treated as
/// zero by the generalized eigensolver.
inline constexpr double kSingularPencilTol = 1e-10;

/// Largest accepted ratio between the extreme retained eigenvalues of the
/// impact pencil before the instance is rejected as ill-conditioned.
inline constexpr double kPencilConditionLimit = 1e12;

bool all_finite(const Matrix& m);
bool is_symmetric(const Matrix& m, double rel_tol = kSymmetryTol);

/// Returns (m + m^T) / 2.
Matrix symmetrize(const Matrix& m);

/// Throws kDimension / kNonFinite if the matrix is not square or contains
/// NaN/Inf. `what` names the argument in the message.
void require_square_finite(const Matrix& m, const char* what);

/// Throws unless `m` is square, finite and symmetric within kSymmetryTol.
void require_symmetric(const Matrix& m, const char* what);

/// Largest eigenvalue modulus.
double spectral_radius(const Matrix& m);

/// Solves Sigma = F Sigma F^T + Q for Schur-stable F by the doubling
/// iteration (Sigma_{j+1} = Sigma_j + F_j Sigma_j F_j^T, F_{j+1} = F_j^2).
/// Throws kInstability when rho(F) >= 1.
Matrix solve_discrete_lyapunov(const Matrix& f, const Matrix& q);

struct GeneralizedEigenpair {
  double value = 0.0;   ///< smallest generalized eigenvalue over {v : v'Gv > 0}
  Vector vector;        ///< scaled so that v' * gamma * v == eps
  int gamma_rank = 0;   ///< rank of gamma retained by the reduction
  bool reduced = false; ///< true when gamma was singular and the range-space reduction ran
};

/// Smallest generalized eigenvalue of the pencil (psi, gamma) restricted to
/// directions of positive gamma-norm, with the minimizing direction scaled to
/// gamma-norm eps. A singular gamma is handled by restricting to the range of
/// gamma (gamma = U_r diag(lambda) U_r^T). The entry of largest magnitude of
/// the returned vector is nonnegative.
GeneralizedEigenpair smallest_generalized_eigenpair(const Matrix& psi, const Matrix& gamma,
                                                    double eps = 1.0);

/// tau such that P(X > tau) = false_alarm for X ~ chi2(dof).
double chi_square_quantile(double false_alarm, int dof);

/// Regularized upper incomplete gamma survival P(X > x), X ~ chi2(dof).
double chi_square_survival(double x, int dof);

/// Returns R with R^T R = w. Eigenvalues of w down to -1e-9 * ||w|| are
/// clamped to zero; anything more negative raises kNotPsd.
Matrix psd_factor(const Matrix& w);

/// True iff lambda_min(s) >= -tol * (1 + ||s||).
bool is_psd(const Matrix& s, double tol);

double min_eigenvalue(const Matrix& s);

/// Inverse of a symmetric positive definite matrix via Cholesky; throws
/// kNumericalSingularity when the factorization fails.
Matrix spd_inverse(const Matrix& s);

}  // namespace numkit
}  // namespace kldobs
