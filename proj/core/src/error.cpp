#include "kldobs/error.hpp"

namespace kldobs {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimension: return "dimension";
    case ErrorKind::kNonFinite: return "non-finite";
    case ErrorKind::kNotSymmetric: return "not-symmetric";
    case ErrorKind::kNotPsd: return "not-psd";
    case ErrorKind::kDomain: return "domain";
    case ErrorKind::kInstability: return "instability";
    case ErrorKind::kDegenerateImpact: return "degenerate-impact";
    case ErrorKind::kIllConditioned: return "ill-conditioned";
    case ErrorKind::kStructure: return "structure";
    case ErrorKind::kMarginalStability: return "marginal-stability";
    case ErrorKind::kLemmaInapplicable: return "lemma-inapplicable";
    case ErrorKind::kNumericalSingularity: return "numerical-singularity";
    case ErrorKind::kDegenerateNoise: return "degenerate-noise";
    case ErrorKind::kDetectabilityAssumption: return "detectability-assumption";
    case ErrorKind::kRelaxationInfeasible: return "relaxation-infeasible";
    case ErrorKind::kInitializer: return "initializer";
    case ErrorKind::kDivergence: return "divergence";
    case ErrorKind::kNumericalFailure: return "numerical-failure";
    case ErrorKind::kInvalidModel: return "invalid-model";
    case ErrorKind::kConfig: return "config";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind) {}

void raise(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace kldobs
