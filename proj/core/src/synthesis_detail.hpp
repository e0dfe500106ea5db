#pragma once

// Helpers shared by the design translation units.

#include <chrono>

#include "kldobs/synthesis.hpp"

namespace kldobs::detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// [[lin - lambda * gamma, off], [off^T, Z / 2]].
sdp::MatExpr kld_block(const sdp::MatExpr& lin, const sdp::LinExpr& lambda, const Matrix& gamma,
                       const sdp::MatExpr& off, const sdp::MatExpr& z);

/// Throws kDegenerateImpact when Gamma = D_a' W D_a vanishes.
Matrix require_nonzero_gamma(const AttackMatrix& attack, const ImpactWeight& weight);

/// Instant must be one-step or steady; returns true for steady.
bool steady_instant(Instant instant, const char* routine);

std::string instant_name(bool steady);

/// Largest singular value.
double spectral_norm(const Matrix& m);

}  // namespace kldobs::detail
