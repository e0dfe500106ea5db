#include <chrono>
#include <cmath>

#include "kldobs/error.hpp"
#include "kldobs/synthesis.hpp"

namespace kldobs {

namespace {

struct RiccatiResult {
  Matrix p;
  Matrix l;
};

RiccatiResult riccati_fixed_point(const LtiSystem& sys, int max_iterations) {
  const Matrix& a = sys.a();
  const Matrix& c = sys.c();
  const Matrix qw = sys.b_omega() * sys.b_omega().transpose();
  const Matrix rv = sys.d_omega() * sys.d_omega().transpose();
  const Matrix cross = sys.b_omega() * sys.d_omega().transpose();

  Matrix p = qw;
  Matrix l = Matrix::Zero(sys.n_x(), sys.n_y());
  for (int it = 0; it < max_iterations; ++it) {
    const Matrix s = numkit::symmetrize(c * p * c.transpose() + rv);
    Eigen::LLT<Matrix> llt(s);
    if (llt.info() != Eigen::Success) {
      raise(ErrorKind::kDegenerateNoise, "innovation covariance lost positive definiteness");
    }
    l = llt.solve((a * p * c.transpose() + cross).transpose()).transpose();
    const Matrix next = numkit::symmetrize(a * p * a.transpose() + qw - l * s * l.transpose());
    if (!next.allFinite()) break;
    const double delta = (next - p).norm();
    p = next;
    if (delta <= 1e-13 * (1.0 + p.norm())) {
      const Matrix s_final = numkit::symmetrize(c * p * c.transpose() + rv);
      l = Eigen::LLT<Matrix>(s_final).solve((a * p * c.transpose() + cross).transpose()).transpose();
      return {p, l};
    }
  }
  raise(ErrorKind::kDetectabilityAssumption,
        "Riccati recursion did not converge; (A, C) may not be detectable");
}

}  // namespace

Matrix kalman_error_covariance(const LtiSystem& sys, int max_iterations) {
  return riccati_fixed_point(sys, max_iterations).p;
}

ObserverGain kalman_gain(const LtiSystem& sys, int max_iterations) {
  ObserverGain g = ObserverGain::make(sys, riccati_fixed_point(sys, max_iterations).l);
  if (!g.stable()) {
    raise(ErrorKind::kDetectabilityAssumption, "converged Kalman gain is not Schur-stabilizing");
  }
  return g;
}

DesignReport design_onset(const LtiSystem& sys, const AttackMatrix& attack, const ImpactWeight& weight) {
  const auto start = std::chrono::steady_clock::now();
  DesignReport r;
  r.method = Method::kKalman;
  r.instant = "onset";
  r.gain = kalman_gain(sys);
  audit_report(r, sys, attack, weight);
  r.certified_lambda = r.exact_j;
  r.lambda_trace = {r.certified_lambda};
  r.iterations = 1;
  r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace kldobs
