// Infeasible primal-dual path-following method (HKM search direction with a
// Mehrotra predictor-corrector) for
//   primal:  min <C, X>  s.t. <A_i, X> = b_i, X psd (block diagonal)
//   dual:    max b'y     s.t. Z = C - sum_i y_i A_i psd.
// Model variables are the dual y; every LMI becomes one diagonal block.

#include <algorithm>
#include <cmath>
#include <limits>

#include "kldobs/error.hpp"
#include "kldobs/sdp.hpp"

namespace kldobs::sdp {
namespace {

struct Entry {
  int block;
  int r;
  int c;
  double v;
};

struct Compiled {
  std::vector<int> block_size;
  std::vector<Matrix> c;                // per block
  std::vector<std::vector<Entry>> a;    // per active variable, full symmetric entries
  Vector b;
  std::vector<int> var_of;              // active index -> model variable
  Vector var_scale;                     // y_model = y_scaled * c_scale / var_scale
  double c_scale = 1.0;
  double b_scale = 1.0;
  int total_dim = 0;
};

using BlockMat = std::vector<Matrix>;

double dot(const BlockMat& x, const BlockMat& z) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += x[k].cwiseProduct(z[k]).sum();
  return s;
}

double fro(const BlockMat& x) {
  double s = 0.0;
  for (const auto& m : x) s += m.squaredNorm();
  return std::sqrt(s);
}

Vector apply_a(const Compiled& p, const BlockMat& x) {
  Vector out(static_cast<Eigen::Index>(p.a.size()));
  for (std::size_t i = 0; i < p.a.size(); ++i) {
    double s = 0.0;
    for (const Entry& e : p.a[i]) s += e.v * x[static_cast<std::size_t>(e.block)](e.r, e.c);
    out(static_cast<Eigen::Index>(i)) = s;
  }
  return out;
}

BlockMat apply_at(const Compiled& p, const Vector& y) {
  BlockMat out;
  out.reserve(p.block_size.size());
  for (int n : p.block_size) out.push_back(Matrix::Zero(n, n));
  for (std::size_t i = 0; i < p.a.size(); ++i) {
    const double yi = y(static_cast<Eigen::Index>(i));
    if (yi == 0.0) continue;
    for (const Entry& e : p.a[i]) out[static_cast<std::size_t>(e.block)](e.r, e.c) += yi * e.v;
  }
  return out;
}

Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

/// Largest alpha in (0, 1] with x + alpha * dx psd, before the step fraction.
double max_step(const BlockMat& x, const BlockMat& dx) {
  double alpha = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < x.size(); ++k) {
    Eigen::LLT<Matrix> llt(x[k]);
    if (llt.info() != Eigen::Success) return 0.0;
    Matrix s = llt.matrixL().solve(dx[k]);
    s = llt.matrixL().solve(s.transpose()).transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym(s), Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues()(0);
    if (lmin < 0.0) alpha = std::min(alpha, -1.0 / lmin);
  }
  return alpha;
}

Compiled compile(const Problem& problem, std::vector<double>& objective_coeff, std::vector<bool>& active) {
  const int nvar = problem.num_variables();
  objective_coeff.assign(static_cast<std::size_t>(nvar), 0.0);
  for (const auto& [v, c] : problem.objective().terms()) objective_coeff[static_cast<std::size_t>(v)] = c;
  const double sign = problem.sense() == Sense::kMaximize ? 1.0 : -1.0;

  std::vector<std::vector<Entry>> per_var(static_cast<std::size_t>(nvar));
  Compiled p;
  int bidx = 0;
  for (const auto& con : problem.constraints()) {
    const auto n = con.expr.rows();
    Matrix c(n, n);
    for (Eigen::Index col = 0; col < n; ++col) {
      for (Eigen::Index row = 0; row < n; ++row) {
        const LinExpr& e = con.expr(row, col);
        c(row, col) = e.constant();
        for (const auto& [v, coeff] : e.terms()) {
          per_var[static_cast<std::size_t>(v)].push_back(
              {bidx, static_cast<int>(row), static_cast<int>(col), -coeff});
        }
      }
    }
    c = sym(c);
    c.diagonal().array() -= con.margin;
    p.c.push_back(std::move(c));
    p.block_size.push_back(static_cast<int>(n));
    p.total_dim += static_cast<int>(n);
    ++bidx;
  }
  active.assign(static_cast<std::size_t>(nvar), false);
  std::vector<double> bvals;
  for (int v = 0; v < nvar; ++v) {
    auto& entries = per_var[static_cast<std::size_t>(v)];
    if (entries.empty()) continue;
    active[static_cast<std::size_t>(v)] = true;
    p.var_of.push_back(v);
    p.a.push_back(std::move(entries));
    bvals.push_back(sign * objective_coeff[static_cast<std::size_t>(v)]);
  }
  const auto m = static_cast<Eigen::Index>(p.a.size());
  p.b = Vector::Zero(m);
  p.var_scale = Vector::Ones(m);
  for (Eigen::Index i = 0; i < m; ++i) p.b(i) = bvals[static_cast<std::size_t>(i)];

  // Column scaling to unit Frobenius norm, then global scaling of C and b.
  for (Eigen::Index i = 0; i < m; ++i) {
    double nrm = 0.0;
    for (const Entry& e : p.a[static_cast<std::size_t>(i)]) nrm += e.v * e.v;
    nrm = std::sqrt(nrm);
    if (nrm == 0.0) nrm = 1.0;
    for (Entry& e : p.a[static_cast<std::size_t>(i)]) e.v /= nrm;
    p.b(i) /= nrm;
    p.var_scale(i) = nrm;
  }
  double cn = 0.0;
  for (const auto& c : p.c) cn += c.squaredNorm();
  p.c_scale = std::max(1.0, std::sqrt(cn));
  for (auto& c : p.c) c /= p.c_scale;
  p.b_scale = std::max(1.0, p.b.norm());
  p.b /= p.b_scale;
  return p;
}

}  // namespace

Solution Problem::solve(const SolverOptions& options) const {
  Solution sol;
  std::vector<double> obj;
  std::vector<bool> active;

  // Variables absent from every constraint are free: fixed at 0 unless the
  // objective pushes them, in which case the problem is unbounded.
  Compiled p = compile(*this, obj, active);
  sol.x = Vector::Zero(num_vars_);
  for (int v = 0; v < num_vars_; ++v) {
    if (!active[static_cast<std::size_t>(v)] && obj[static_cast<std::size_t>(v)] != 0.0) {
      sol.status = Status::kUnbounded;
      sol.message = "variable " + std::to_string(v) + " appears in the objective but in no constraint";
      sol.objective = sense_ == Sense::kMaximize ? std::numeric_limits<double>::infinity()
                                                 : -std::numeric_limits<double>::infinity();
      return sol;
    }
  }

  const auto m = static_cast<Eigen::Index>(p.a.size());
  const std::size_t nb = p.block_size.size();
  const double n = std::max(1, p.total_dim);

  // Initial point.
  BlockMat x, z;
  for (std::size_t k = 0; k < nb; ++k) {
    const int sz = p.block_size[k];
    double max_ratio = 0.0, max_anorm = p.c[k].norm();
    for (Eigen::Index i = 0; i < m; ++i) {
      double an = 0.0;
      for (const Entry& e : p.a[static_cast<std::size_t>(i)]) {
        if (e.block == static_cast<int>(k)) an += e.v * e.v;
      }
      an = std::sqrt(an);
      if (an > 0.0) max_ratio = std::max(max_ratio, (1.0 + std::abs(p.b(i))) / (1.0 + an));
      max_anorm = std::max(max_anorm, an);
    }
    const double xi = std::max({10.0, std::sqrt(double(sz)), sz * max_ratio});
    const double eta = std::max({10.0, std::sqrt(double(sz)), max_anorm});
    x.push_back(xi * Matrix::Identity(sz, sz));
    z.push_back(eta * Matrix::Identity(sz, sz));
  }
  Vector y = Vector::Zero(m);

  const double norm_b = p.b.norm();
  double norm_c = 0.0;
  for (const auto& c : p.c) norm_c += c.squaredNorm();
  norm_c = std::sqrt(norm_c);

  enum class Outcome { kRunning, kConverged, kInfeasible, kUnbounded, kStalled };
  Outcome outcome = Outcome::kRunning;
  int stall = 0;
  int it = 0;
  struct Best {
    double merit = std::numeric_limits<double>::infinity();
    double pinf = 0.0, dinf = 0.0, relgap = 0.0;
    Vector y;
  } best;
  int since_best = 0;
  constexpr int kPatience = 8;
  double pinf = 0.0, dinf = 0.0, relgap = 0.0;

  for (; it < options.max_iterations; ++it) {
    const Vector ax = apply_a(p, x);
    const Vector rp = p.b - ax;
    BlockMat rd = apply_at(p, y);
    for (std::size_t k = 0; k < nb; ++k) rd[k] = p.c[k] - z[k] - rd[k];
    const double pobj = dot(p.c, x);
    const double dobj = p.b.dot(y);
    pinf = rp.norm() / (1.0 + norm_b);
    dinf = fro(rd) / (1.0 + norm_c);
    relgap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    const double mu = dot(x, z) / n;

    if (pinf <= options.feasibility_tol && dinf <= options.feasibility_tol && relgap <= options.gap_tol) {
      outcome = Outcome::kConverged;
      break;
    }
    // Keep the best iterate seen; near the optimum the Newton systems lose
    // accuracy and later iterates can drift.
    const double merit = std::max({pinf, dinf, relgap});
    if (merit < best.merit) {
      best = {merit, pinf, dinf, relgap, y};
      since_best = 0;
    } else if (++since_best > kPatience) {
      outcome = Outcome::kStalled;
      break;
    }
    // Certificates. X / (-<C,X>) with A(X) ~ 0 proves the LMIs infeasible;
    // y / (b'y) with -A'y psd proves the objective unbounded.
    if (pobj < 0.0 && ax.norm() <= 1e-8 * (-pobj)) {
      sol.certificate_residual = ax.norm() / (-pobj);
      outcome = Outcome::kInfeasible;
      break;
    }
    if (dobj > 0.0 && dobj > 1e8 * (1.0 + norm_c) && fro(rd) <= 1e-8 * dobj) {
      sol.certificate_residual = (1.0 + norm_c) / dobj;
      outcome = Outcome::kUnbounded;
      break;
    }

    std::vector<Matrix> zinv(nb);
    bool z_definite = true;
    for (std::size_t k = 0; k < nb && z_definite; ++k) {
      Eigen::LLT<Matrix> zf(z[k]);
      if (zf.info() != Eigen::Success) {
        z_definite = false;
      } else {
        zinv[k] = sym(zf.solve(Matrix::Identity(z[k].rows(), z[k].cols())));
      }
    }
    if (!z_definite) {
      outcome = Outcome::kStalled;
      break;
    }

    // Schur complement M_ij = <A_i, X A_j Z^{-1}>.
    Matrix schur = Matrix::Zero(m, m);
    {
      std::vector<Matrix> xa(nb);
      std::vector<bool> touched(nb);
      for (Eigen::Index j = 0; j < m; ++j) {
        std::fill(touched.begin(), touched.end(), false);
        for (const Entry& e : p.a[static_cast<std::size_t>(j)]) {
          const auto k = static_cast<std::size_t>(e.block);
          if (!touched[k]) {
            xa[k] = Matrix::Zero(p.block_size[k], p.block_size[k]);
            touched[k] = true;
          }
          xa[k].col(e.c) += e.v * x[k].col(e.r);
        }
        for (std::size_t k = 0; k < nb; ++k) {
          if (touched[k]) xa[k] = xa[k] * zinv[k];
        }
        for (Eigen::Index i = j; i < m; ++i) {
          double s = 0.0;
          for (const Entry& e : p.a[static_cast<std::size_t>(i)]) {
            const auto k = static_cast<std::size_t>(e.block);
            if (touched[k]) s += e.v * xa[k](e.c, e.r);
          }
          schur(i, j) = s;
          schur(j, i) = s;
        }
      }
    }
    Eigen::LLT<Matrix> llt(schur);
    Eigen::LDLT<Matrix> ldlt;
    const bool use_llt = llt.info() == Eigen::Success;
    if (!use_llt) {
      ldlt.compute(schur);
      if (ldlt.info() != Eigen::Success) {
        outcome = Outcome::kStalled;
        break;
      }
    }
    // Two rounds of iterative refinement against the unfactored matrix.
    auto solve_m = [&](const Vector& rhs) -> Vector {
      Vector sol_m = use_llt ? Vector(llt.solve(rhs)) : Vector(ldlt.solve(rhs));
      for (int r = 0; r < 2; ++r) {
        const Vector res = rhs - schur * sol_m;
        sol_m += use_llt ? Vector(llt.solve(res)) : Vector(ldlt.solve(res));
      }
      return sol_m;
    };

    // X R_d Z^{-1}, shared by both directions.
    BlockMat xrz(nb);
    for (std::size_t k = 0; k < nb; ++k) xrz[k] = x[k] * rd[k] * zinv[k];
    const Vector a_xrz = apply_a(p, xrz);

    auto direction = [&](const BlockMat& kmat, Vector& dy, BlockMat& dx, BlockMat& dz) {
      dy = solve_m(rp - apply_a(p, kmat) + a_xrz);
      dz = apply_at(p, dy);
      dx.resize(nb);
      for (std::size_t k = 0; k < nb; ++k) {
        dz[k] = rd[k] - dz[k];
        dx[k] = kmat[k] - sym(x[k] * dz[k] * zinv[k]);
      }
    };

    // Predictor.
    BlockMat kpred(nb);
    for (std::size_t k = 0; k < nb; ++k) kpred[k] = -x[k];
    Vector dya;
    BlockMat dxa, dza;
    direction(kpred, dya, dxa, dza);
    const double ap_a = std::min(1.0, max_step(x, dxa));
    const double ad_a = std::min(1.0, max_step(z, dza));
    double mu_aff = 0.0;
    for (std::size_t k = 0; k < nb; ++k) {
      mu_aff += (x[k] + ap_a * dxa[k]).cwiseProduct(z[k] + ad_a * dza[k]).sum();
    }
    mu_aff /= n;
    const double expon = std::max(1.0, 3.0 * std::pow(std::min(ap_a, ad_a), 2));
    const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, expon), 0.0, 1.0);

    // Corrector.
    BlockMat kcor(nb);
    for (std::size_t k = 0; k < nb; ++k) {
      kcor[k] = sigma * mu * zinv[k] - x[k] - sym(dxa[k] * dza[k] * zinv[k]);
    }
    Vector dy;
    BlockMat dx, dz;
    direction(kcor, dy, dx, dz);

    const double ap_max = max_step(x, dx);
    const double ad_max = max_step(z, dz);
    const double frac = 0.9;
    const double ap = std::min(1.0, frac * ap_max);
    const double ad = std::min(1.0, frac * ad_max);
    if (!(ap > 1e-12) && !(ad > 1e-12)) {
      if (++stall >= 3) {
        outcome = Outcome::kStalled;
        break;
      }
    } else {
      stall = 0;
    }
    for (std::size_t k = 0; k < nb; ++k) {
      x[k] = sym(x[k] + ap * dx[k]);
      z[k] = sym(z[k] + ad * dz[k]);
    }
    y += ad * dy;
    if (!y.allFinite()) {
      outcome = Outcome::kStalled;
      break;
    }
  }

  if ((outcome == Outcome::kStalled || outcome == Outcome::kRunning) && best.y.size() == m) {
    y = best.y;
    pinf = best.pinf;
    dinf = best.dinf;
    relgap = best.relgap;
  }
  sol.iterations = it;
  sol.primal_infeasibility = pinf;
  sol.dual_infeasibility = dinf;
  sol.relative_gap = relgap;

  for (Eigen::Index i = 0; i < m; ++i) {
    sol.x(p.var_of[static_cast<std::size_t>(i)]) = y(i) * p.c_scale / p.var_scale(i);
  }
  sol.objective = objective_.evaluate(sol.x);

  sol.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (const auto& con : constraints_) {
    const Matrix e = con.expr.evaluate(sol.x);
    double scale = 0.0;
    for (Eigen::Index c = 0; c < con.expr.cols(); ++c) {
      for (Eigen::Index r = 0; r < con.expr.rows(); ++r) scale = std::max(scale, std::abs(con.expr(r, c).constant()));
    }
    sol.constraint_scale = std::max(sol.constraint_scale, scale);
    const double lmin = numkit::min_eigenvalue(numkit::symmetrize(e)) - con.margin;
    if (lmin < sol.min_eigenvalue) {
      sol.min_eigenvalue = lmin;
      sol.worst_constraint = con.label;
    }
  }
  if (constraints_.empty()) sol.min_eigenvalue = 0.0;

  const double loose = 1e-6;
  switch (outcome) {
    case Outcome::kConverged:
      sol.status = Status::kOptimal;
      break;
    case Outcome::kInfeasible:
      sol.status = Status::kInfeasible;
      sol.message = "infeasibility certificate found";
      break;
    case Outcome::kUnbounded:
      sol.status = Status::kUnbounded;
      sol.message = "unboundedness certificate found";
      break;
    case Outcome::kRunning:
    case Outcome::kStalled:
      if (pinf <= loose && dinf <= loose && relgap <= loose) {
        sol.status = Status::kOptimal;
        sol.message = "converged to reduced accuracy";
      } else {
        sol.status = Status::kNumericalFailure;
        sol.message = outcome == Outcome::kStalled ? "step length stalled" : "iteration limit reached";
      }
      break;
  }
  if (sol.status == Status::kOptimal && sol.min_eigenvalue < -1e-7 * (1.0 + sol.constraint_scale)) {
    sol.status = Status::kNumericalFailure;
    sol.message = "returned point violates constraint '" + sol.worst_constraint + "'";
  }
  return sol;
}

}  // namespace kldobs::sdp
