#pragma once

// Reference computations used by the tests. Each one takes a different route
// from the library code it checks: Gelfand's formula instead of an
// eigensolver, plain fixed-point iteration instead of doubling, grid search
// instead of a generalized eigensolver, and the closed-form chi-square tail
// recursion instead of the incomplete gamma function.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "kldobs/bench/preset.hpp"
#include "kldobs/plant.hpp"

namespace oracle {

using kldobs::Matrix;
using kldobs::Vector;

inline kldobs::LtiSystem thermal() { return kldobs::bench::preset_thermal(); }

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double normal() { return normal_(engine_); }
  double uniform(double lo = 0.0, double hi = 1.0) { return lo + (hi - lo) * unif_(engine_); }
  Matrix matrix(Eigen::Index r, Eigen::Index c) {
    Matrix m(r, c);
    for (Eigen::Index j = 0; j < c; ++j) {
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = normal();
    }
    return m;
  }
  /// G G^T with G n x rank.
  Matrix psd(Eigen::Index n, Eigen::Index rank) {
    const Matrix g = matrix(n, rank);
    return g * g.transpose();
  }
  Matrix spd(Eigen::Index n) { return psd(n, n) + 0.1 * Matrix::Identity(n, n); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
};

/// rho(M) = lim ||M^k||^(1/k), evaluated at k = 2^60 by repeated squaring
/// with renormalization.
inline double spectral_radius(const Matrix& m) {
  Matrix x = m;
  double log_scale = 0.0;
  double inv_power = 1.0;
  for (int j = 0; j < 60; ++j) {
    const double s = x.norm();
    if (s == 0.0) return 0.0;
    x /= s;
    log_scale += std::log(s) * inv_power;
    x = x * x;
    inv_power *= 0.5;
  }
  const double s = x.norm();
  if (s == 0.0) return 0.0;
  return std::exp(log_scale + std::log(s) * inv_power);
}

/// Sigma <- F Sigma F^T + Q until the update stalls.
inline Matrix lyapunov_fixed_point(const Matrix& f, const Matrix& q, int max_iterations = 2000000) {
  Matrix s = q;
  for (int i = 0; i < max_iterations; ++i) {
    Matrix next = f * s * f.transpose() + q;
    const double change = (next - s).norm();
    s = std::move(next);
    if (change <= 1e-16 * (1.0 + s.norm())) break;
  }
  return s;
}

/// P(X > x) for X ~ chi2(dof) by Q(x; v + 2) = Q(x; v) + (x/2)^(v/2) e^(-x/2) / Gamma(v/2 + 1),
/// starting from Q(x; 1) = erfc(sqrt(x/2)) or Q(x; 2) = exp(-x/2).
inline double chi2_tail(double x, int dof) {
  if (x <= 0.0) return 1.0;
  double q;
  int v;
  if (dof % 2 == 1) {
    q = std::erfc(std::sqrt(0.5 * x));
    v = 1;
  } else {
    q = std::exp(-0.5 * x);
    v = 2;
  }
  while (v < dof) {
    q += std::exp(0.5 * v * std::log(0.5 * x) - 0.5 * x - std::lgamma(0.5 * v + 1.0));
    v += 2;
  }
  return q;
}

inline double chi2_quantile(double alpha, int dof) {
  double lo = 0.0, hi = 1.0;
  while (chi2_tail(hi, dof) > alpha) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (chi2_tail(mid, dof) > alpha ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// min a' Psi a over a' Gamma a = 1 for 3 x 3 positive definite Gamma, by a
/// coarse then fine grid over the sphere in Cholesky coordinates.
inline double min_pencil_grid3(const Matrix& psi, const Matrix& gamma) {
  const Matrix l = gamma.llt().matrixL();
  const Matrix li = l.inverse();
  const Matrix h = li * psi * li.transpose();
  const auto value = [&](double th, double ph) {
    const Vector u = (Vector(3) << std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)).finished();
    return u.dot(h * u);
  };
  const double pi = std::acos(-1.0);
  double best = std::numeric_limits<double>::infinity(), bt = 0.0, bp = 0.0;
  const int n = 360;
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j < 2 * n; ++j) {
      const double th = pi * i / n, ph = pi * j / n;
      const double v = value(th, ph);
      if (v < best) best = v, bt = th, bp = ph;
    }
  }
  const double step = pi / n;
  for (int i = -100; i <= 100; ++i) {
    for (int j = -100; j <= 100; ++j) {
      const double v = value(bt + step * i / 50.0, bp + step * j / 50.0);
      best = std::min(best, v);
    }
  }
  return best;
}

/// Random gain with rho(A - LC) <= target, by shrinking a random matrix
/// toward a known stabilizing gain.
inline Matrix random_stable_gain(const kldobs::LtiSystem& sys, const Matrix& stabilizing, Rng& rng,
                                 double spread = 1.0) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const Matrix l = stabilizing + spread * std::pow(0.8, attempt) * rng.matrix(sys.n_x(), sys.n_y());
    if (spectral_radius(sys.a() - l * sys.c()) < 0.98) return l;
  }
  return stabilizing;
}

}  // namespace oracle
