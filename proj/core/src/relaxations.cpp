#include <cmath>

#include "kldobs/error.hpp"
#include "synthesis_detail.hpp"

namespace kldobs {

using sdp::MatExpr;

std::vector<MatExpr> stability_relaxation_constraints(const LtiSystem& sys, const MatExpr& p,
                                                      const MatExpr& z, const MatExpr& g) {
  const auto nx = sys.n_x();
  const auto ny = sys.n_y();
  const auto nw = sys.n_w();
  if (p.rows() != nx || p.cols() != nx) raise(ErrorKind::kDimension, "P must be n_x x n_x");
  if (z.rows() != ny || z.cols() != ny) raise(ErrorKind::kDimension, "Z must be n_y x n_y");
  if (g.rows() != nx || g.cols() != ny) raise(ErrorKind::kDimension, "G must be n_x x n_y");

  const MatExpr pf = p * sys.a() - g * sys.c();
  const MatExpr pb = p * sys.b_omega() - g * sys.d_omega();
  const MatExpr first = sdp::blocks({
      {p, pf, pb},
      {pf.transpose(), p, MatExpr::zero(nx, nw)},
      {pb.transpose(), MatExpr::zero(nw, nx), MatExpr::identity(nw)},
  });
  const MatExpr zc = z * sys.c();
  const MatExpr zd = z * sys.d_omega();
  const MatExpr second = sdp::blocks({
      {z, zc, zd},
      {zc.transpose(), p, MatExpr::zero(nx, nw)},
      {zd.transpose(), MatExpr::zero(nw, nx), MatExpr::identity(nw)},
  });
  return {first, second};
}

void add_stability_relaxation(sdp::Problem& problem, const LtiSystem& sys, const MatExpr& p,
                              const MatExpr& z, const MatExpr& g, double margin) {
  auto lmis = stability_relaxation_constraints(sys, p, z, g);
  problem.add_lmi(lmis[0], "stability", margin);
  problem.add_lmi(lmis[1], "residual-covariance", margin);
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kKalman: return "kalman";
    case Method::kLmi: return "lmi";
    case Method::kAo: return "ao";
    case Method::kAdmm: return "admm";
    case Method::kBlend: return "blend";
  }
  return "kalman";
}

Method parse_method(std::string_view text) {
  if (text == "kalman") return Method::kKalman;
  if (text == "lmi") return Method::kLmi;
  if (text == "ao") return Method::kAo;
  if (text == "admm") return Method::kAdmm;
  if (text == "blend") return Method::kBlend;
  raise(ErrorKind::kConfig, "unknown method '" + std::string(text) + "'");
}

void DesignConfig::validate() const {
  if (gamma_grid.empty()) raise(ErrorKind::kConfig, "gamma grid is empty");
  for (double g : gamma_grid) {
    if (!(g > 0.0) || !std::isfinite(g)) raise(ErrorKind::kConfig, "gamma grid entries must be positive");
  }
  if (max_iters < 1) raise(ErrorKind::kConfig, "max_iters must be >= 1");
  if (!(conv_tol > 0.0)) raise(ErrorKind::kConfig, "conv_tol must be positive");
  if (!(coupling_tol > 0.0)) raise(ErrorKind::kConfig, "coupling_tol must be positive");
  if (!(admm_step > 0.0)) raise(ErrorKind::kConfig, "admm_step must be positive");
  if (!(alpha >= 0.0 && alpha <= 1.0)) raise(ErrorKind::kConfig, "alpha must lie in [0, 1]");
  if (!(strict_margin >= 0.0)) raise(ErrorKind::kConfig, "strict_margin must be nonnegative");
}

void audit_report(DesignReport& report, const LtiSystem& sys, const AttackMatrix& attack,
                  const ImpactWeight& weight) {
  report.gain = ObserverGain::make(sys, report.gain.l);
  require_stable(report.gain);
  report.j_onset = detectability(sys, report.gain, attack, weight, Instant::onset());
  report.j_one_step = detectability(sys, report.gain, attack, weight, Instant::one_step());
  try {
    report.j_steady = detectability(sys, report.gain, attack, weight, Instant::steady());
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kLemmaInapplicable && e.kind() != ErrorKind::kNumericalSingularity) throw;
    report.j_steady = std::numeric_limits<double>::quiet_NaN();
    report.warnings.push_back(std::string("steady-state detectability unavailable: ") + e.what());
  }
  if (report.instant == "onset") {
    report.exact_j = report.j_onset;
  } else if (report.instant == "one-step") {
    report.exact_j = report.j_one_step;
  } else if (report.instant == "steady") {
    report.exact_j = report.j_steady;
  } else {
    report.exact_j = report.alpha * report.j_one_step + (1.0 - report.alpha) * report.j_steady;
  }
}

namespace detail {

MatExpr kld_block(const MatExpr& lin, const sdp::LinExpr& lambda, const Matrix& gamma, const MatExpr& off,
                  const MatExpr& z) {
  return sdp::blocks({{lin - lambda * gamma, off}, {off.transpose(), 0.5 * z}});
}

Matrix require_nonzero_gamma(const AttackMatrix& attack, const ImpactWeight& weight) {
  Matrix gamma = impact_gamma(attack, weight);
  if (gamma.cwiseAbs().maxCoeff() == 0.0) {
    raise(ErrorKind::kDegenerateImpact, "impact matrix Gamma is zero; detectability is unbounded");
  }
  return gamma;
}

bool steady_instant(Instant instant, const char* routine) {
  if (instant.kind == Instant::Kind::kSteady) return true;
  if (instant.kind == Instant::Kind::kOneStep || (instant.kind == Instant::Kind::kFinite && instant.k == 1)) {
    return false;
  }
  raise(ErrorKind::kConfig, std::string(routine) + " supports the one-step and steady instants only");
}

std::string instant_name(bool steady) { return steady ? "steady" : "one-step"; }

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

}  // namespace detail
}  // namespace kldobs
