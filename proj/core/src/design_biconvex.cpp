#include <cmath>
#include <optional>

#include "kldobs/error.hpp"
#include "synthesis_detail.hpp"

namespace kldobs {

using sdp::LinExpr;
using sdp::MatExpr;

namespace {

/// One detectability term of the AO objective.
struct Term {
  bool steady = false;
  double weight = 1.0;
};

struct Context {
  const LtiSystem& sys;
  const AttackMatrix& attack;
  Matrix gamma;
  Matrix m;  // C (I - A)^{-1}; empty unless some term is steady
  const DesignConfig& cfg;
};

/// Y'(I - CL) D_a for one-step terms or Y'(I + ML) for steady ones, with
/// exactly one of (Y, L) a decision variable.
MatExpr coupling(const Context& ctx, bool steady, const MatExpr* y_var, const Matrix* y_fix,
                 const MatExpr* l_var, const Matrix* l_fix) {
  const Matrix& da = ctx.attack.d_a();
  const auto ny = ctx.sys.n_y();
  const Matrix eye = Matrix::Identity(ny, ny);
  if (y_var) {
    const Matrix t = steady ? Matrix(eye + ctx.m * *l_fix) : Matrix((eye - ctx.sys.c() * *l_fix) * da);
    return y_var->transpose() * t;
  }
  const Matrix yt = y_fix->transpose();
  if (steady) return MatExpr(yt) + Matrix(yt * ctx.m) * *l_var;
  return MatExpr(Matrix(yt * da)) - (Matrix(yt * ctx.sys.c()) * *l_var) * da;
}

MatExpr kld_lmi(const Context& ctx, bool steady, const MatExpr& coupled, const MatExpr& yt,
                const LinExpr& lambda, const MatExpr& z) {
  const Matrix& da = ctx.attack.d_a();
  if (steady) {
    const MatExpr yda = yt * da;
    return detail::kld_block(yda + yda.transpose(), lambda, ctx.gamma, coupled, z);
  }
  return detail::kld_block(coupled + coupled.transpose(), lambda, ctx.gamma, yt, z);
}

struct Step1Result {
  sdp::Status status = sdp::Status::kNumericalFailure;
  double objective = 0.0;
  Matrix p;
  std::vector<Matrix> y;
  std::vector<double> lambdas;
};

Step1Result ao_step1(const Context& ctx, const std::vector<Term>& terms, const Matrix& l) {
  const auto nx = ctx.sys.n_x(), ny = ctx.sys.n_y(), na = ctx.attack.n_a();
  sdp::Problem prob;
  const MatExpr p = prob.add_symmetric("P", nx);
  const MatExpr z = prob.add_symmetric("Z", ny);
  add_stability_relaxation(prob, ctx.sys, p, z, p * l, ctx.cfg.strict_margin);
  LinExpr objective;
  std::vector<LinExpr> lambdas;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const std::string tag = std::to_string(i);
    const MatExpr y = prob.add_matrix("Y" + tag, ny, na);
    const LinExpr lambda = prob.add_scalar("lambda" + tag);
    const MatExpr coupled = coupling(ctx, terms[i].steady, &y, nullptr, nullptr, &l);
    prob.add_lmi(kld_lmi(ctx, terms[i].steady, coupled, y.transpose(), lambda, z), "kld" + tag);
    prob.add_nonnegative(lambda, "lambda" + tag);
    objective.add_scaled(lambda, terms[i].weight);
    lambdas.push_back(lambda);
  }
  prob.maximize(objective);
  const sdp::Solution s = prob.solve(ctx.cfg.solver);
  Step1Result r;
  r.status = s.status;
  if (!s.optimal()) return r;
  r.objective = s.objective;
  r.p = numkit::symmetrize(prob.value(s, "P"));
  for (std::size_t i = 0; i < terms.size(); ++i) {
    r.y.push_back(prob.value(s, "Y" + std::to_string(i)));
    r.lambdas.push_back(s.value(lambdas[i]));
  }
  return r;
}

struct Step2Result {
  sdp::Status status = sdp::Status::kNumericalFailure;
  double objective = 0.0;
  Matrix l;
  std::vector<double> lambdas;
};

Step2Result ao_step2(const Context& ctx, const std::vector<Term>& terms, const Matrix& p,
                     const std::vector<Matrix>& ys) {
  const auto nx = ctx.sys.n_x(), ny = ctx.sys.n_y();
  sdp::Problem prob;
  const MatExpr l = prob.add_matrix("L", nx, ny);
  const MatExpr z = prob.add_symmetric("Z", ny);
  add_stability_relaxation(prob, ctx.sys, MatExpr(p), z, p * l, ctx.cfg.strict_margin);
  LinExpr objective;
  std::vector<LinExpr> lambdas;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const std::string tag = std::to_string(i);
    const LinExpr lambda = prob.add_scalar("lambda" + tag);
    const MatExpr coupled = coupling(ctx, terms[i].steady, nullptr, &ys[i], &l, nullptr);
    prob.add_lmi(kld_lmi(ctx, terms[i].steady, coupled, MatExpr(Matrix(ys[i].transpose())), lambda, z),
                 "kld" + tag);
    prob.add_nonnegative(lambda, "lambda" + tag);
    objective.add_scaled(lambda, terms[i].weight);
    lambdas.push_back(lambda);
  }
  prob.maximize(objective);
  const sdp::Solution s = prob.solve(ctx.cfg.solver);
  Step2Result r;
  r.status = s.status;
  if (!s.optimal()) return r;
  r.objective = s.objective;
  r.l = prob.value(s, "L");
  for (const auto& lam : lambdas) r.lambdas.push_back(s.value(lam));
  return r;
}

Context make_context(const LtiSystem& sys, const AttackMatrix& attack, const ImpactWeight& weight,
                     bool any_steady, const DesignConfig& cfg) {
  Context ctx{sys, attack, detail::require_nonzero_gamma(attack, weight), Matrix(), cfg};
  if (any_steady) ctx.m = steady_input_map(sys);
  return ctx;
}

/// Starting gain per the configured initializer; records the chain taken.
Matrix initial_gain(const LtiSystem& sys, const AttackMatrix& attack, const ImpactWeight& weight,
                    bool steady, const DesignConfig& cfg, Initializer init, std::vector<std::string>& chain) {
  switch (init) {
    case Initializer::kCustom: {
      ObserverGain g = ObserverGain::make(sys, cfg.custom_gain);
      if (!g.stable()) raise(ErrorKind::kInitializer, "custom initial gain is not Schur-stabilizing");
      chain.emplace_back("custom");
      return g.l;
    }
    case Initializer::kKalman:
      chain.emplace_back("kalman");
      return kalman_gain(sys).l;
    case Initializer::kLmi:
      try {
        DesignReport r = steady ? design_steady_lmi(sys, attack, weight, cfg)
                                : design_one_step_lmi(sys, attack, weight, cfg);
        chain.emplace_back("lmi");
        return r.gain.l;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kRelaxationInfeasible) throw;
        chain.emplace_back("lmi: " + std::string(to_string(e.kind())));
        chain.emplace_back("kalman");
        return kalman_gain(sys).l;
      }
  }
  return kalman_gain(sys).l;
}

double weighted(const std::vector<Term>& terms, const std::vector<double>& lambdas) {
  double v = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) v += terms[i].weight * lambdas[i];
  return v;
}

/// Alg. 1 over a weighted sum of detectability terms.
DesignReport run_ao(const Context& ctx, const std::vector<Term>& terms, const Matrix& l0) {
  DesignReport r;
  r.method = Method::kAo;
  r.termination = "max-iterations";
  Matrix l = l0;
  std::vector<double> certified;
  double incumbent = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < ctx.cfg.max_iters; ++it) {
    const Step1Result s1 = ao_step1(ctx, terms, l);
    if (s1.status != sdp::Status::kOptimal) {
      if (it == 0) {
        raise(ErrorKind::kInitializer, "AO step 1 at the initial gain returned " +
                                           std::string(sdp::to_string(s1.status)));
      }
      r.status = "warning";
      r.termination = "subproblem-failure";
      r.warnings.push_back("AO step 1 returned " + std::string(sdp::to_string(s1.status)) + " at iteration " +
                           std::to_string(it) + "; keeping the previous iterate");
      break;
    }
    // The previous Step-2 point is feasible for this Step 1, so a lower
    // value only reflects solver accuracy: stop at the incumbent.
    const double v1 = weighted(terms, s1.lambdas);
    if (v1 < incumbent) {
      r.termination = "stationary";
      break;
    }
    r.lambda_trace.push_back(v1);
    incumbent = v1;
    certified = s1.lambdas;
    const Step2Result s2 = ao_step2(ctx, terms, s1.p, s1.y);
    r.iterations = it + 1;
    if (s2.status != sdp::Status::kOptimal ||
        !(numkit::spectral_radius(ctx.sys.a() - s2.l * ctx.sys.c()) < 1.0)) {
      r.status = "warning";
      r.termination = "subproblem-failure";
      r.warnings.push_back("AO step 2 returned " + std::string(sdp::to_string(s2.status)) + " at iteration " +
                           std::to_string(it) + "; keeping the previous iterate");
      break;
    }
    // Likewise (L, Z, lambda) from Step 1 is feasible for Step 2.
    const double v2 = weighted(terms, s2.lambdas);
    if (v2 < incumbent) {
      r.termination = "stationary";
      break;
    }
    r.lambda_trace.push_back(v2);
    incumbent = v2;
    certified = s2.lambdas;
    const double step = detail::spectral_norm(s2.l - l);
    l = s2.l;
    if (step <= ctx.cfg.conv_tol) {
      r.termination = "converged";
      break;
    }
  }
  r.gain.l = l;
  r.certified_lambda = weighted(terms, certified);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    (terms[i].steady ? r.certified_lambda_steady : r.certified_lambda_one_step) = certified[i];
  }
  return r;
}

void finish(DesignReport& r, const LtiSystem& sys, const AttackMatrix& attack, const ImpactWeight& weight) {
  audit_report(r, sys, attack, weight);
  if (r.certified_lambda > r.exact_j + 1e-6) {
    r.status = "warning";
    r.warnings.push_back("certified lambda exceeds the audited detectability");
  }
}

template <typename Run>
DesignReport with_fallback(const LtiSystem& sys, const AttackMatrix& attack, const ImpactWeight& weight,
                           bool steady, const DesignConfig& cfg, Run run) {
  std::vector<std::string> chain;
  const Matrix l0 = initial_gain(sys, attack, weight, steady, cfg, cfg.initializer, chain);
  try {
    DesignReport r = run(l0);
    r.fallback = chain;
    return r;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kInitializer || cfg.initializer != Initializer::kLmi || chain.back() == "kalman") {
      throw;
    }
    chain.back() += ": " + std::string(e.what());
    chain.emplace_back("kalman");
    DesignReport r = run(kalman_gain(sys).l);
    r.fallback = chain;
    return r;
  }
}

}  // namespace

DesignReport design_biconvex_ao(const LtiSystem& sys, const AttackMatrix& attack, const ImpactWeight& weight,
                                Instant instant, const DesignConfig& cfg) {
  detail::Stopwatch clock;
  cfg.validate();
  const bool steady = detail::steady_instant(instant, "AO design");
  const Context ctx = make_context(sys, attack, weight, steady, cfg);
  DesignReport r = with_fallback(sys, attack, weight, steady, cfg,
                                 [&](const Matrix& l0) { return run_ao(ctx, {{steady, 1.0}}, l0); });
  r.instant = detail::instant_name(steady);
  finish(r, sys, attack, weight);
  r.wall_time_s = clock.seconds();
  return r;
}

DesignReport design_blend(const LtiSystem& sys, const AttackMatrix& attack, const ImpactWeight& weight,
                          double alpha, const DesignConfig& cfg) {
  detail::Stopwatch clock;
  DesignConfig local = cfg;
  local.alpha = alpha;
  local.validate();
  // A zero-weight term leaves the objective untouched and its constraints
  // are met by Y = 0, lambda = 0, so it is dropped.
  std::vector<Term> terms;
  if (alpha > 0.0) terms.push_back({false, alpha});
  if (alpha < 1.0) terms.push_back({true, 1.0 - alpha});
  const Context ctx = make_context(sys, attack, weight, alpha < 1.0, local);
  const bool init_steady = alpha < 0.5;
  DesignReport r = with_fallback(sys, attack, weight, init_steady, local,
                                 [&](const Matrix& l0) { return run_ao(ctx, terms, l0); });
  r.method = Method::kBlend;
  r.instant = "blend";
  r.alpha = alpha;
  finish(r, sys, attack, weight);
  r.wall_time_s = clock.seconds();
  return r;
}

double certify_fixed_gain(const LtiSystem& sys, const AttackMatrix& attack, const ImpactWeight& weight,
                          const Matrix& l, Instant instant, const DesignConfig& cfg) {
  const bool steady = detail::steady_instant(instant, "certification");
  const Context ctx = make_context(sys, attack, weight, steady, cfg);
  const Step1Result s = ao_step1(ctx, {{steady, 1.0}}, l);
  if (s.status != sdp::Status::kOptimal) return std::numeric_limits<double>::quiet_NaN();
  return s.lambdas[0];
}

namespace {

LinExpr frobenius_inner(const Matrix& a, const MatExpr& b) {
  LinExpr out;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      if (a(r, c) != 0.0) out.add_scaled(b(r, c), a(r, c));
    }
  }
  return out;
}

/// t >= ||vec(V)||^2 as [[t, v'], [v, I]] >= 0.
void add_epigraph(sdp::Problem& prob, const LinExpr& t, const MatExpr& v) {
  const MatExpr col = sdp::vec(v);
  MatExpr tt(1, 1);
  tt(0, 0) = t;
  prob.add_lmi(sdp::blocks({{tt, col.transpose()}, {col, MatExpr::identity(col.rows())}}), "penalty-epigraph");
}

DesignReport run_admm(const Context& ctx, bool steady, const Matrix& l0) {
  const LtiSystem& sys = ctx.sys;
  const auto nx = sys.n_x(), ny = sys.n_y(), na = ctx.attack.n_a();
  const double eta = ctx.cfg.admm_step;
  const Matrix eye = Matrix::Identity(nx, nx);

  DesignReport r;
  r.method = Method::kAdmm;
  r.termination = "max-iterations";
  const Matrix sigma = error_covariance(sys, ObserverGain::make(sys, l0));
  Matrix q = ctx.cfg.admm_q0 == AdmmQ0::kErrorCovariance ? sigma : numkit::spd_inverse(sigma);
  q = numkit::symmetrize(q);
  Matrix l = l0;
  Matrix multiplier = Matrix::Zero(nx, nx + ny);
  std::vector<double> residuals;
  double last_residual = std::numeric_limits<double>::infinity();

  for (int it = 0; it < ctx.cfg.max_iters; ++it) {
    // Block 1: (P, G, Y, Z, lambda) with (L, Q) fixed.
    sdp::Problem p1;
    const MatExpr p = p1.add_symmetric("P", nx);
    const MatExpr g = p1.add_matrix("G", nx, ny);
    const MatExpr y = p1.add_matrix("Y", ny, na);
    const MatExpr z = p1.add_symmetric("Z", ny);
    const LinExpr lambda1 = p1.add_scalar("lambda");
    const LinExpr t1 = p1.add_scalar("t");
    add_stability_relaxation(p1, sys, p, z, g, ctx.cfg.strict_margin);
    const MatExpr c1 = coupling(ctx, steady, &y, nullptr, nullptr, &l);
    p1.add_lmi(kld_lmi(ctx, steady, c1, y.transpose(), lambda1, z), "kld");
    p1.add_nonnegative(lambda1, "lambda");
    const MatExpr v1 = sdp::blocks({{p * q - MatExpr(eye), q * g - MatExpr(l)}});
    add_epigraph(p1, t1, v1);
    p1.minimize(-lambda1 + frobenius_inner(multiplier, v1) + (0.5 * eta) * t1);
    const sdp::Solution s1 = p1.solve(ctx.cfg.solver);
    if (!s1.optimal()) {
      if (it == 0) {
        raise(ErrorKind::kInitializer, "ADMM block 1 at the initial gain returned " +
                                           std::string(sdp::to_string(s1.status)));
      }
      r.status = "warning";
      r.termination = "subproblem-failure";
      r.warnings.push_back("ADMM block 1 returned " + std::string(sdp::to_string(s1.status)) +
                           " at iteration " + std::to_string(it));
      break;
    }
    const Matrix pv = numkit::symmetrize(p1.value(s1, "P"));
    const Matrix gv = p1.value(s1, "G");
    const Matrix yv = p1.value(s1, "Y");
    const Matrix zv = numkit::symmetrize(p1.value(s1, "Z"));
    r.lambda_trace.push_back(s1.value(lambda1));

    // Block 2: (L, Q, lambda) with (P, G, Y, Z) fixed.
    sdp::Problem p2;
    const MatExpr lv = p2.add_matrix("L", nx, ny);
    const MatExpr qv = p2.add_symmetric("Q", nx);
    const LinExpr lambda2 = p2.add_scalar("lambda");
    const LinExpr t2 = p2.add_scalar("t");
    const MatExpr c2 = coupling(ctx, steady, nullptr, &yv, &lv, nullptr);
    p2.add_lmi(kld_lmi(ctx, steady, c2, MatExpr(Matrix(yv.transpose())), lambda2, MatExpr(zv)), "kld");
    p2.add_nonnegative(lambda2, "lambda");
    const MatExpr vq = sdp::blocks({{Matrix(pv) * qv - MatExpr(eye), qv * gv - lv}});
    add_epigraph(p2, t2, vq);
    p2.minimize(-lambda2 + frobenius_inner(multiplier, vq) + (0.5 * eta) * t2);
    const sdp::Solution s2 = p2.solve(ctx.cfg.solver);
    r.iterations = it + 1;
    if (!s2.optimal()) {
      r.status = "warning";
      r.termination = "subproblem-failure";
      r.warnings.push_back("ADMM block 2 returned " + std::string(sdp::to_string(s2.status)) +
                           " at iteration " + std::to_string(it));
      break;
    }
    const Matrix l_new = p2.value(s2, "L");
    q = numkit::symmetrize(p2.value(s2, "Q"));
    r.final_step_lambda = s2.value(lambda2);
    r.lambda_trace.push_back(r.final_step_lambda);

    Matrix v(nx, nx + ny);
    v << pv * q - eye, q * gv - l_new;
    multiplier += eta * v;
    last_residual = detail::spectral_norm(v);
    residuals.push_back(last_residual);
    const double step = detail::spectral_norm(l_new - l);
    l = l_new;
    if (residuals.size() > 5) {
      bool growing = true;
      for (std::size_t k = residuals.size() - 5; k < residuals.size(); ++k) {
        growing = growing && residuals[k] > residuals[k - 1];
      }
      if (growing && residuals.back() > 10.0 * residuals[residuals.size() - 6]) {
        raise(ErrorKind::kDivergence, "ADMM coupling residual grew tenfold over five iterations");
      }
    }
    if (step <= ctx.cfg.conv_tol && last_residual <= ctx.cfg.coupling_tol) {
      r.termination = "converged";
      break;
    }
  }
  r.coupling_residual = last_residual;
  if (!(numkit::spectral_radius(sys.a() - l * sys.c()) < 1.0)) {
    raise(ErrorKind::kDivergence, "ADMM terminated at a gain that is not Schur-stabilizing");
  }
  r.gain.l = l;
  return r;
}

}  // namespace

DesignReport design_biconvex_admm(const LtiSystem& sys, const AttackMatrix& attack, const ImpactWeight& weight,
                                  Instant instant, const DesignConfig& cfg) {
  detail::Stopwatch clock;
  cfg.validate();
  const bool steady = detail::steady_instant(instant, "ADMM design");
  const Context ctx = make_context(sys, attack, weight, steady, cfg);
  DesignReport r = with_fallback(sys, attack, weight, steady, cfg,
                                 [&](const Matrix& l0) { return run_admm(ctx, steady, l0); });
  r.instant = detail::instant_name(steady);
  // The last block-2 multiplier is not a certified bound for the returned
  // gain; certify it with a fixed-gain solve instead.
  r.certified_lambda = certify_fixed_gain(sys, attack, weight, r.gain.l, instant, cfg);
  if (std::isnan(r.certified_lambda)) {
    r.status = "warning";
    r.warnings.push_back("fixed-gain certification failed");
  }
  (steady ? r.certified_lambda_steady : r.certified_lambda_one_step) = r.certified_lambda;
  finish(r, sys, attack, weight);
  r.wall_time_s = clock.seconds();
  return r;
}

DesignReport design(const LtiSystem& sys, const AttackMatrix& attack, const ImpactWeight& weight, Method method,
                    Instant instant, const DesignConfig& cfg) {
  if (instant.kind == Instant::Kind::kOnset || method == Method::kKalman) {
    DesignReport r = design_onset(sys, attack, weight);
    if (instant.kind != Instant::Kind::kOnset) {
      r.instant = instant.label();
      audit_report(r, sys, attack, weight);
      r.certified_lambda = std::numeric_limits<double>::quiet_NaN();
    }
    return r;
  }
  switch (method) {
    case Method::kLmi:
      return detail::steady_instant(instant, "LMI design") ? design_steady_lmi(sys, attack, weight, cfg)
                                                           : design_one_step_lmi(sys, attack, weight, cfg);
    case Method::kAo: return design_biconvex_ao(sys, attack, weight, instant, cfg);
    case Method::kAdmm: return design_biconvex_admm(sys, attack, weight, instant, cfg);
    case Method::kBlend: return design_blend(sys, attack, weight, cfg.alpha, cfg);
    case Method::kKalman: break;
  }
  return design_onset(sys, attack, weight);
}

}  // namespace kldobs
