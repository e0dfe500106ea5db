#include <cmath>
#include <functional>
#include <optional>

#include "kldobs/error.hpp"
#include "synthesis_detail.hpp"

namespace kldobs {

using sdp::LinExpr;
using sdp::MatExpr;

namespace {

struct GammaSolve {
  std::string status;
  double lambda = 0.0;
  Matrix l;
};

/// Recovers L = P^{-1} G and checks it is stabilizing.
std::optional<Matrix> recover_gain(const LtiSystem& sys, const Matrix& p, const Matrix& g) {
  Eigen::LLT<Matrix> llt(numkit::symmetrize(p));
  if (llt.info() != Eigen::Success) return std::nullopt;
  Matrix l = llt.solve(g);
  if (!l.allFinite() || !(numkit::spectral_radius(sys.a() - l * sys.c()) < 1.0)) return std::nullopt;
  return l;
}

GammaSolve solve_one_step(const LtiSystem& sys, const AttackMatrix& attack, const ImpactWeight& weight,
                          double gamma, const DesignConfig& cfg) {
  const auto nx = sys.n_x(), ny = sys.n_y(), nw = sys.n_w();
  const auto na = attack.n_a();
  const Matrix& da = attack.d_a();
  const Matrix rw = weight.r_w;
  const auto r = rw.rows();

  sdp::Problem prob;
  const MatExpr p = prob.add_symmetric("P", nx);
  const MatExpr g = prob.add_matrix("G", nx, ny);
  const MatExpr y = prob.add_matrix("Y", ny, na);
  const MatExpr z = prob.add_symmetric("Z", ny);
  const LinExpr mu = prob.add_scalar("mu");
  add_stability_relaxation(prob, sys, p, z, g, cfg.strict_margin);

  const MatExpr yt = y.transpose();
  const MatExpr yda = yt * da;
  const MatExpr top = sdp::blocks({
      {yda + yda.transpose(), MatExpr(Matrix(da.transpose() * rw.transpose()))},
      {MatExpr(Matrix(rw * da)), mu * Matrix(2.0 * Matrix::Identity(r, r))},
  });
  const MatExpr gamma1 = sdp::blocks({{yt * sys.c(), Matrix(da.transpose()) * g.transpose(), yt * sys.d_omega()}});
  const auto wide = 2 * nx + nw;
  const MatExpr off = sdp::blocks({
      {gamma1, MatExpr::zero(na, r)},
      {MatExpr::zero(r, wide), mu * Matrix(Matrix::Identity(r, r))},
  });
  const MatExpr gamma2 = sdp::blocks({
      {p * (1.0 / (2.0 + 1.0 / gamma)), MatExpr::zero(nx, nx), MatExpr::zero(nx, nw)},
      {MatExpr::zero(nx, nx), p * (1.0 / gamma), MatExpr::zero(nx, nw)},
      {MatExpr::zero(nw, nx), MatExpr::zero(nw, nx), MatExpr(Matrix(0.5 * Matrix::Identity(nw, nw)))},
  });
  const MatExpr bot = sdp::blocks({
      {gamma2, MatExpr::zero(wide, r)},
      {MatExpr::zero(r, wide), mu * Matrix(Matrix::Identity(r, r))},
  });
  prob.add_lmi(sdp::blocks({{top, off}, {off.transpose(), bot}}), "one-step-kld");
  prob.add_nonnegative(mu, "mu");
  prob.minimize(mu);

  const sdp::Solution s = prob.solve(cfg.solver);
  GammaSolve out;
  out.status = std::string(sdp::to_string(s.status));
  if (!s.optimal()) return out;
  const double mu_v = s.value(mu);
  if (!(mu_v > 1e-12)) {
    out.status = "degenerate-mu";
    return out;
  }
  auto l = recover_gain(sys, prob.value(s, "P"), prob.value(s, "G"));
  if (!l) {
    out.status = "unstable-recovery";
    return out;
  }
  out.lambda = 1.0 / mu_v;
  out.l = *l;
  return out;
}

GammaSolve solve_steady(const LtiSystem& sys, const AttackMatrix& attack, const Matrix& gam, double gamma, const DesignConfig& cfg) {
  const auto nx = sys.n_x(), ny = sys.n_y();
  const auto na = attack.n_a();
  const Matrix& da = attack.d_a();
  const Matrix m = steady_input_map(sys);

  sdp::Problem prob;
  const MatExpr p = prob.add_symmetric("P", nx);
  const MatExpr g = prob.add_matrix("G", nx, ny);
  const MatExpr y = prob.add_matrix("Y", ny, na);
  const MatExpr z = prob.add_symmetric("Z", ny);
  const LinExpr lambda = prob.add_scalar("lambda");
  add_stability_relaxation(prob, sys, p, z, g, cfg.strict_margin);

  const MatExpr yt = y.transpose();
  const MatExpr yda = yt * da;
  const MatExpr theta1 = detail::kld_block(yda + yda.transpose(), lambda, gam, yt, z);
  const MatExpr theta2 = sdp::blocks({{-(yt * m)}, {MatExpr::zero(ny, nx)}});
  const MatExpr theta3 = sdp::blocks({{MatExpr::zero(na, nx)}, {g.transpose()}});
  prob.add_lmi(sdp::blocks({
                   {theta1, theta2, theta3},
                   {theta2.transpose(), p * (1.0 / gamma), MatExpr::zero(nx, nx)},
                   {theta3.transpose(), MatExpr::zero(nx, nx), p * gamma},
               }),
               "steady-kld");
  prob.add_nonnegative(lambda, "lambda");
  prob.maximize(lambda);

  const sdp::Solution s = prob.solve(cfg.solver);
  GammaSolve out;
  out.status = std::string(sdp::to_string(s.status));
  if (!s.optimal()) return out;
  auto l = recover_gain(sys, prob.value(s, "P"), prob.value(s, "G"));
  if (!l) {
    out.status = "unstable-recovery";
    return out;
  }
  out.lambda = s.value(lambda);
  out.l = *l;
  return out;
}

DesignReport grid_search(const LtiSystem& sys, const AttackMatrix& attack, const ImpactWeight& weight,
                         const DesignConfig& cfg, const std::string& instant,
                         const std::function<GammaSolve(double)>& solve_at) {
  detail::Stopwatch clock;
  DesignReport r;
  r.method = Method::kLmi;
  r.instant = instant;
  std::optional<GammaSolve> best;
  for (double gamma : cfg.gamma_grid) {
    GammaSolve gs = solve_at(gamma);
    GammaOutcome o{gamma, gs.status, std::numeric_limits<double>::quiet_NaN()};
    if (gs.status == "optimal") {
      o.lambda = gs.lambda;
      if (!best || gs.lambda > best->lambda) {
        best = gs;
        r.gamma = gamma;
      }
    }
    r.gamma_outcomes.push_back(o);
  }
  if (!best) {
    raise(ErrorKind::kRelaxationInfeasible,
          "LMI relaxation (" + instant + ") has no solution on any grid gamma");
  }
  r.gain.l = best->l;
  r.certified_lambda = best->lambda;
  r.lambda_trace = {best->lambda};
  r.iterations = static_cast<int>(cfg.gamma_grid.size());
  audit_report(r, sys, attack, weight);
  if (r.certified_lambda > r.exact_j + 1e-6) {
    r.status = "warning";
    r.warnings.push_back("certified lambda exceeds the audited detectability");
  }
  r.wall_time_s = clock.seconds();
  return r;
}

}  // namespace

DesignReport design_one_step_lmi(const LtiSystem& sys, const AttackMatrix& attack, const ImpactWeight& weight,
                                 const DesignConfig& cfg) {
  cfg.validate();
  detail::require_nonzero_gamma(attack, weight);
  return grid_search(sys, attack, weight, cfg, "one-step",
                     [&](double gamma) { return solve_one_step(sys, attack, weight, gamma, cfg); });
}

DesignReport design_steady_lmi(const LtiSystem& sys, const AttackMatrix& attack, const ImpactWeight& weight,
                               const DesignConfig& cfg) {
  cfg.validate();
  const Matrix gam = detail::require_nonzero_gamma(attack, weight);
  steady_input_map(sys);  // unit-eigenvalue gate
  return grid_search(sys, attack, weight, cfg, "steady",
                     [&](double gamma) { return solve_steady(sys, attack, gam, gamma, cfg); });
}

}  // namespace kldobs
