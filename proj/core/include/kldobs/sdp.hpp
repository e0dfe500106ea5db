#pragma once

// Small conic modeling layer (scalar, rectangular and symmetric matrix
// variables; affine LMI constraints) and a primal-dual interior-point solver
// for it.

#include <concepts>
#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "kldobs/numkit.hpp"

namespace kldobs::sdp {

/// Affine scalar expression: constant + sum coeff * x[var]. Terms are kept
/// sorted by variable index with no duplicates.
class LinExpr {
 public:
  LinExpr() = default;
  LinExpr(double constant) : constant_(constant) {}  // NOLINT(implicit)

  static LinExpr variable(int index, double coeff = 1.0);

  double constant() const noexcept { return constant_; }
  const std::vector<std::pair<int, double>>& terms() const noexcept { return terms_; }
  bool is_constant() const noexcept { return terms_.empty(); }

  LinExpr& operator+=(const LinExpr& other);
  LinExpr& operator-=(const LinExpr& other);
  LinExpr& operator*=(double s);

  double evaluate(const Vector& x) const;

  friend LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
  friend LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
  friend LinExpr operator*(double s, LinExpr a) { return a *= s; }
  friend LinExpr operator*(LinExpr a, double s) { return a *= s; }
  friend LinExpr operator-(LinExpr a) { return a *= -1.0; }

  /// Adds coeff * other in one pass.
  void add_scaled(const LinExpr& other, double coeff);

 private:
  double constant_ = 0.0;
  std::vector<std::pair<int, double>> terms_;
};

/// Dense matrix of affine expressions (column-major storage).
class MatExpr {
 public:
  MatExpr() = default;
  MatExpr(Eigen::Index rows, Eigen::Index cols);
  MatExpr(const Matrix& constant);  // NOLINT(implicit)

  static MatExpr zero(Eigen::Index rows, Eigen::Index cols) { return MatExpr(rows, cols); }
  static MatExpr identity(Eigen::Index n);

  Eigen::Index rows() const noexcept { return rows_; }
  Eigen::Index cols() const noexcept { return cols_; }

  LinExpr& operator()(Eigen::Index r, Eigen::Index c) { return data_[static_cast<std::size_t>(c * rows_ + r)]; }
  const LinExpr& operator()(Eigen::Index r, Eigen::Index c) const {
    return data_[static_cast<std::size_t>(c * rows_ + r)];
  }

  MatExpr transpose() const;
  MatExpr block(Eigen::Index r0, Eigen::Index c0, Eigen::Index nr, Eigen::Index nc) const;
  Matrix evaluate(const Vector& x) const;

  MatExpr& operator+=(const MatExpr& other);
  MatExpr& operator-=(const MatExpr& other);
  MatExpr& operator*=(double s);

  friend MatExpr operator+(MatExpr a, const MatExpr& b) { return a += b; }
  friend MatExpr operator-(MatExpr a, const MatExpr& b) { return a -= b; }
  friend MatExpr operator-(MatExpr a) { return a *= -1.0; }
  friend MatExpr operator*(double s, MatExpr a) { return a *= s; }
  friend MatExpr operator*(MatExpr a, double s) { return a *= s; }
  friend MatExpr operator*(const Matrix& m, const MatExpr& e);
  friend MatExpr operator*(const MatExpr& e, const Matrix& m);

 private:
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
  std::vector<LinExpr> data_;
};

/// Scalar expression times constant matrix.
MatExpr scale_matrix(const LinExpr& s, const Matrix& m);

/// Same as scale_matrix; constrained so doubles keep Eigen's own operator.
template <std::same_as<LinExpr> S>
MatExpr operator*(const S& s, const Matrix& m) {
  return scale_matrix(s, m);
}

/// Block matrix assembly. Every row of blocks must agree on row count and
/// every block column on column count; empty MatExpr entries of matching
/// shape may be given as MatExpr::zero.
MatExpr blocks(const std::vector<std::vector<MatExpr>>& rows);

/// Frobenius-vectorized entries (column-major) as a column MatExpr.
MatExpr vec(const MatExpr& m);

enum class Sense { kMaximize, kMinimize };

enum class Status { kOptimal, kInfeasible, kUnbounded, kNumericalFailure };

std::string_view to_string(Status status);

struct SolverOptions {
  double feasibility_tol = 1e-8;
  double gap_tol = 1e-8;
  int max_iterations = 120;
};

struct Solution {
  Status status = Status::kNumericalFailure;
  Vector x;
  double objective = 0.0;
  /// Smallest eigenvalue over all constraints of (expr - margin * I);
  /// nonnegative means every LMI holds.
  double min_eigenvalue = 0.0;
  /// Largest constant-term scale among the constraints.
  double constraint_scale = 0.0;
  std::string worst_constraint;
  int iterations = 0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  double relative_gap = 0.0;
  /// Residual of the infeasibility/unboundedness certificate, when one is reported.
  double certificate_residual = 0.0;
  std::string message;

  bool optimal() const noexcept { return status == Status::kOptimal; }
  double value(const LinExpr& e) const { return e.evaluate(x); }
  Matrix value(const MatExpr& e) const { return e.evaluate(x); }
};

/// Conic problem: maximize or minimize a linear objective subject to
/// symmetric affine LMIs expr(x) >= margin * I.
class Problem {
 public:
  LinExpr add_scalar(const std::string& name);
  MatExpr add_matrix(const std::string& name, Eigen::Index rows, Eigen::Index cols);
  MatExpr add_symmetric(const std::string& name, Eigen::Index n);

  /// Throws kNotSymmetric if expr is not symmetric as an affine map and
  /// kDimension if it is not square.
  void add_lmi(const MatExpr& expr, const std::string& label, double margin = 0.0);
  /// Scalar inequality expr >= margin.
  void add_nonnegative(const LinExpr& expr, const std::string& label, double margin = 0.0);

  void maximize(const LinExpr& objective) { objective_ = objective; sense_ = Sense::kMaximize; }
  void minimize(const LinExpr& objective) { objective_ = objective; sense_ = Sense::kMinimize; }

  int num_variables() const noexcept { return num_vars_; }
  std::size_t num_constraints() const noexcept { return constraints_.size(); }

  /// Values of a named variable block in a solution.
  Matrix value(const Solution& s, const std::string& name) const;

  Solution solve(const SolverOptions& options = {}) const;

  struct Constraint {
    MatExpr expr;
    std::string label;
    double margin = 0.0;
  };
  struct VariableBlock {
    int offset = 0;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    bool symmetric = false;
  };

  const std::vector<Constraint>& constraints() const noexcept { return constraints_; }
  const LinExpr& objective() const noexcept { return objective_; }
  Sense sense() const noexcept { return sense_; }

 private:
  void declare(const std::string& name, VariableBlock block);

  int num_vars_ = 0;
  std::map<std::string, VariableBlock> variables_;
  std::vector<Constraint> constraints_;
  LinExpr objective_;
  Sense sense_ = Sense::kMaximize;
};

/// Functional form of Problem::solve.
inline Solution solve_sdp(const Problem& problem, const SolverOptions& options = {}) {
  return problem.solve(options);
}

}  // namespace kldobs::sdp
