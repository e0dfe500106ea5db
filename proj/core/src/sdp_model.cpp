#include <algorithm>
#include <cmath>

#include "kldobs/error.hpp"
#include "kldobs/sdp.hpp"

namespace kldobs::sdp {

LinExpr LinExpr::variable(int index, double coeff) {
  LinExpr e;
  if (coeff != 0.0) e.terms_.emplace_back(index, coeff);
  return e;
}

void LinExpr::add_scaled(const LinExpr& other, double coeff) {
  if (coeff == 0.0) return;
  constant_ += coeff * other.constant_;
  if (other.terms_.empty()) return;
  if (terms_.empty()) {
    terms_.reserve(other.terms_.size());
    for (const auto& [v, c] : other.terms_) terms_.emplace_back(v, coeff * c);
    return;
  }
  std::vector<std::pair<int, double>> merged;
  merged.reserve(terms_.size() + other.terms_.size());
  auto a = terms_.begin();
  auto b = other.terms_.begin();
  while (a != terms_.end() || b != other.terms_.end()) {
    if (b == other.terms_.end() || (a != terms_.end() && a->first < b->first)) {
      merged.push_back(*a++);
    } else if (a == terms_.end() || b->first < a->first) {
      merged.emplace_back(b->first, coeff * b->second);
      ++b;
    } else {
      const double c = a->second + coeff * b->second;
      if (c != 0.0) merged.emplace_back(a->first, c);
      ++a;
      ++b;
    }
  }
  terms_ = std::move(merged);
}

LinExpr& LinExpr::operator+=(const LinExpr& other) {
  add_scaled(other, 1.0);
  return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& other) {
  add_scaled(other, -1.0);
  return *this;
}

LinExpr& LinExpr::operator*=(double s) {
  if (s == 0.0) {
    constant_ = 0.0;
    terms_.clear();
    return *this;
  }
  constant_ *= s;
  for (auto& t : terms_) t.second *= s;
  return *this;
}

double LinExpr::evaluate(const Vector& x) const {
  double v = constant_;
  for (const auto& [i, c] : terms_) v += c * x(i);
  return v;
}

MatExpr::MatExpr(Eigen::Index rows, Eigen::Index cols)
    : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows * cols)) {}

MatExpr::MatExpr(const Matrix& constant) : MatExpr(constant.rows(), constant.cols()) {
  for (Eigen::Index c = 0; c < cols_; ++c) {
    for (Eigen::Index r = 0; r < rows_; ++r) (*this)(r, c) = LinExpr(constant(r, c));
  }
}

MatExpr MatExpr::identity(Eigen::Index n) { return MatExpr(Matrix::Identity(n, n)); }

MatExpr MatExpr::transpose() const {
  MatExpr out(cols_, rows_);
  for (Eigen::Index c = 0; c < cols_; ++c) {
    for (Eigen::Index r = 0; r < rows_; ++r) out(c, r) = (*this)(r, c);
  }
  return out;
}

MatExpr MatExpr::block(Eigen::Index r0, Eigen::Index c0, Eigen::Index nr, Eigen::Index nc) const {
  if (r0 < 0 || c0 < 0 || r0 + nr > rows_ || c0 + nc > cols_) {
    raise(ErrorKind::kDimension, "MatExpr block out of range");
  }
  MatExpr out(nr, nc);
  for (Eigen::Index c = 0; c < nc; ++c) {
    for (Eigen::Index r = 0; r < nr; ++r) out(r, c) = (*this)(r0 + r, c0 + c);
  }
  return out;
}

Matrix MatExpr::evaluate(const Vector& x) const {
  Matrix out(rows_, cols_);
  for (Eigen::Index c = 0; c < cols_; ++c) {
    for (Eigen::Index r = 0; r < rows_; ++r) out(r, c) = (*this)(r, c).evaluate(x);
  }
  return out;
}

MatExpr& MatExpr::operator+=(const MatExpr& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) raise(ErrorKind::kDimension, "MatExpr sum shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

MatExpr& MatExpr::operator-=(const MatExpr& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) raise(ErrorKind::kDimension, "MatExpr difference shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

MatExpr& MatExpr::operator*=(double s) {
  for (auto& e : data_) e *= s;
  return *this;
}

MatExpr operator*(const Matrix& m, const MatExpr& e) {
  if (m.cols() != e.rows()) raise(ErrorKind::kDimension, "Matrix * MatExpr shape mismatch");
  MatExpr out(m.rows(), e.cols());
  for (Eigen::Index c = 0; c < e.cols(); ++c) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      const LinExpr& src = e(k, c);
      if (src.is_constant() && src.constant() == 0.0) continue;
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        if (m(r, k) != 0.0) out(r, c).add_scaled(src, m(r, k));
      }
    }
  }
  return out;
}

MatExpr operator*(const MatExpr& e, const Matrix& m) {
  if (e.cols() != m.rows()) raise(ErrorKind::kDimension, "MatExpr * Matrix shape mismatch");
  MatExpr out(e.rows(), m.cols());
  for (Eigen::Index k = 0; k < e.cols(); ++k) {
    for (Eigen::Index r = 0; r < e.rows(); ++r) {
      const LinExpr& src = e(r, k);
      if (src.is_constant() && src.constant() == 0.0) continue;
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        if (m(k, c) != 0.0) out(r, c).add_scaled(src, m(k, c));
      }
    }
  }
  return out;
}

MatExpr scale_matrix(const LinExpr& s, const Matrix& m) {
  MatExpr out(m.rows(), m.cols());
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      if (m(r, c) != 0.0) out(r, c).add_scaled(s, m(r, c));
    }
  }
  return out;
}

MatExpr blocks(const std::vector<std::vector<MatExpr>>& rows) {
  if (rows.empty() || rows.front().empty()) raise(ErrorKind::kDimension, "empty block layout");
  const std::size_t ncol = rows.front().size();
  std::vector<Eigen::Index> heights, widths(ncol, 0);
  for (const auto& row : rows) {
    if (row.size() != ncol) raise(ErrorKind::kDimension, "ragged block layout");
    heights.push_back(row.front().rows());
    for (std::size_t j = 0; j < ncol; ++j) {
      if (row[j].rows() != heights.back()) raise(ErrorKind::kDimension, "block row height mismatch");
    }
  }
  for (std::size_t j = 0; j < ncol; ++j) {
    widths[j] = rows.front()[j].cols();
    for (const auto& row : rows) {
      if (row[j].cols() != widths[j]) raise(ErrorKind::kDimension, "block column width mismatch");
    }
  }
  Eigen::Index total_r = 0, total_c = 0;
  for (auto h : heights) total_r += h;
  for (auto w : widths) total_c += w;
  MatExpr out(total_r, total_c);
  Eigen::Index r0 = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Eigen::Index c0 = 0;
    for (std::size_t j = 0; j < ncol; ++j) {
      const MatExpr& b = rows[i][j];
      for (Eigen::Index c = 0; c < b.cols(); ++c) {
        for (Eigen::Index r = 0; r < b.rows(); ++r) out(r0 + r, c0 + c) = b(r, c);
      }
      c0 += widths[j];
    }
    r0 += heights[i];
  }
  return out;
}

MatExpr vec(const MatExpr& m) {
  MatExpr out(m.rows() * m.cols(), 1);
  Eigen::Index k = 0;
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) out(k++, 0) = m(r, c);
  }
  return out;
}

std::string_view to_string(Status status) {
  switch (status) {
    case Status::kOptimal: return "optimal";
    case Status::kInfeasible: return "infeasible";
    case Status::kUnbounded: return "unbounded";
    case Status::kNumericalFailure: return "numerical-failure";
  }
  return "numerical-failure";
}

void Problem::declare(const std::string& name, VariableBlock block) {
  if (!variables_.emplace(name, block).second) {
    raise(ErrorKind::kInvalidModel, "variable '" + name + "' declared twice");
  }
}

LinExpr Problem::add_scalar(const std::string& name) {
  declare(name, {num_vars_, 1, 1, false});
  return LinExpr::variable(num_vars_++);
}

MatExpr Problem::add_matrix(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  if (rows < 1 || cols < 1) raise(ErrorKind::kDimension, "variable '" + name + "' has empty shape");
  declare(name, {num_vars_, rows, cols, false});
  MatExpr out(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) out(r, c) = LinExpr::variable(num_vars_++);
  }
  return out;
}

MatExpr Problem::add_symmetric(const std::string& name, Eigen::Index n) {
  if (n < 1) raise(ErrorKind::kDimension, "variable '" + name + "' has empty shape");
  declare(name, {num_vars_, n, n, true});
  MatExpr out(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index r = c; r < n; ++r) {
      out(r, c) = LinExpr::variable(num_vars_++);
      out(c, r) = out(r, c);
    }
  }
  return out;
}

namespace {

bool same_expr(const LinExpr& a, const LinExpr& b, double tol) {
  if (std::abs(a.constant() - b.constant()) > tol) return false;
  LinExpr d = a - b;
  for (const auto& t : d.terms()) {
    if (std::abs(t.second) > tol) return false;
  }
  return true;
}

}  // namespace

void Problem::add_lmi(const MatExpr& expr, const std::string& label, double margin) {
  if (expr.rows() != expr.cols() || expr.rows() == 0) {
    raise(ErrorKind::kDimension, "LMI '" + label + "' is not square");
  }
  double scale = 1.0;
  for (Eigen::Index c = 0; c < expr.cols(); ++c) {
    for (Eigen::Index r = 0; r < expr.rows(); ++r) {
      scale = std::max(scale, std::abs(expr(r, c).constant()));
      for (const auto& t : expr(r, c).terms()) scale = std::max(scale, std::abs(t.second));
    }
  }
  const double tol = numkit::kSymmetryTol * scale;
  for (Eigen::Index c = 0; c < expr.cols(); ++c) {
    for (Eigen::Index r = c + 1; r < expr.rows(); ++r) {
      if (!same_expr(expr(r, c), expr(c, r), tol)) {
        raise(ErrorKind::kNotSymmetric, "LMI '" + label + "' is not symmetric at (" +
                                            std::to_string(r) + ", " + std::to_string(c) + ")");
      }
    }
  }
  for (Eigen::Index c = 0; c < expr.cols(); ++c) {
    for (Eigen::Index r = c; r < expr.rows(); ++r) {
      for (const auto& t : expr(r, c).terms()) {
        if (t.first < 0 || t.first >= num_vars_) {
          raise(ErrorKind::kInvalidModel, "LMI '" + label + "' uses an undeclared variable");
        }
      }
    }
  }
  constraints_.push_back({expr, label, margin});
}

void Problem::add_nonnegative(const LinExpr& expr, const std::string& label, double margin) {
  MatExpr m(1, 1);
  m(0, 0) = expr;
  add_lmi(m, label, margin);
}

Matrix Problem::value(const Solution& s, const std::string& name) const {
  auto it = variables_.find(name);
  if (it == variables_.end()) raise(ErrorKind::kInvalidModel, "unknown variable '" + name + "'");
  const VariableBlock& b = it->second;
  Matrix out(b.rows, b.cols);
  int k = b.offset;
  if (b.symmetric) {
    for (Eigen::Index c = 0; c < b.cols; ++c) {
      for (Eigen::Index r = c; r < b.rows; ++r) {
        out(r, c) = s.x(k++);
        out(c, r) = out(r, c);
      }
    }
  } else {
    for (Eigen::Index c = 0; c < b.cols; ++c) {
      for (Eigen::Index r = 0; r < b.rows; ++r) out(r, c) = s.x(k++);
    }
  }
  return out;
}

}  // namespace kldobs::sdp
