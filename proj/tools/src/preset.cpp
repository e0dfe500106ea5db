#include "kldobs/bench/preset.hpp"

#include "kldobs/error.hpp"

namespace kldobs::bench {

LtiSystem preset_thermal() {
  Matrix a(6, 6);
  a << 0.8, 0.0, 0.0, 0.0, 0.1, 0.0,
       0.0, 0.8, 0.0, 0.1, 0.0, 0.0,
       0.0, 0.0, 0.7, 0.1, 0.0, 0.1,
       0.0, 0.1, 0.1, 0.7, 0.0, 0.0,
       0.1, 0.0, 0.0, 0.0, 0.7, 0.1,
       0.0, 0.0, 0.1, 0.0, 0.1, 0.7;
  Matrix b = Matrix::Zero(6, 4);
  b.topRows(4).setIdentity();
  Matrix c(5, 6);
  c << 0.5, 0.0, 0.0, 0.0, 0.5, 0.0,
       0.0, 0.5, 0.0, 0.5, 0.0, 0.0,
       0.0, 0.0, 0.5, 0.5, 0.0, 0.0,
       0.0, 0.0, 0.0, 0.0, 0.5, 0.5,
       0.0, 0.0, 0.5, 0.0, 0.0, 0.5;
  Matrix b_omega = Matrix::Zero(6, 11);
  b_omega.leftCols(6) = 0.1 * Matrix::Identity(6, 6);
  Matrix d_omega = Matrix::Zero(5, 11);
  d_omega.rightCols(5) = 0.1 * Matrix::Identity(5, 5);
  return LtiSystem(a, b, c, b_omega, d_omega);
}

std::vector<std::string> preset_names() { return {"thermal"}; }

LtiSystem preset(const std::string& name) {
  if (name == "thermal") return preset_thermal();
  raise(ErrorKind::kConfig, "unknown preset '" + name + "'");
}

}  // namespace kldobs::bench
