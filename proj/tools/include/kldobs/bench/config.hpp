#pragma once

// Scenario configuration: a sectioned key-value text format.
//
//   # comment
//   [system]
//   preset = thermal
//   [attack]
//   sensors = 1, 3, 5
//   weight_matrix = [[1, 0],
//                    [0, 1]]
//
// Matrix literals are bracketed row lists and may span lines until the
// brackets balance. Unknown keys, bad values and cross-field violations are
// all collected before load_config reports them.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kldobs/adversary.hpp"
#include "kldobs/error.hpp"
#include "kldobs/synthesis.hpp"

namespace kldobs::bench {

struct ConfigIssue {
  int line = 0;  ///< 0 when the issue is not tied to a line
  std::string field;
  std::string message;
};

/// Thrown with every violation found; what() lists them one per line.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues);
  const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

struct SystemSection {
  std::string preset;  ///< empty when matrices are given inline
  std::optional<Matrix> a, b, c, b_omega, d_omega;
  std::optional<Matrix> controller_gain;
};

/// Which gain a worst-case attack is synthesized against: "kalman", a design
/// instant ("one-step", "steady", ...), or "own" (each detector faces its
/// own worst case).
struct AttackSection {
  std::vector<int> sensors;
  WeightKind weight = WeightKind::kEstimationError;
  std::optional<Matrix> weight_matrix;
  double epsilon = 1.0;
  ScheduleKind schedule = ScheduleKind::kStep;
  int onset = 0;
  double beta = 0.01;
  std::string target = "kalman";
  Instant target_instant = Instant::onset();
  std::optional<Vector> vector;  ///< explicit vector instead of a worst case
  bool random = false;
};

enum class MethodChoice { kLmi, kAo, kAdmm, kBlend, kBest };

std::string_view to_string(MethodChoice m);
MethodChoice parse_method_choice(std::string_view text);

struct DesignSection {
  std::vector<std::string> instants{"onset", "one-step", "steady"};
  MethodChoice method = MethodChoice::kBest;
  std::map<std::string, MethodChoice> method_for;  ///< per-instant override
  DesignConfig cfg;

  MethodChoice method_at(const std::string& instant) const;
};

struct MonitorSection {
  double false_alarm = 0.005;
  int horizon = 300;
  int trials = 2000;
  std::uint64_t base_seed = 0;
  int workers = 0;
};

struct OutputSection {
  std::string directory = "out";
  int decimate = 20;
  bool timings = false;
};

struct ScenarioConfig {
  std::string name = "scenario";
  SystemSection system;
  AttackSection attack;
  DesignSection design;
  MonitorSection monitor;
  OutputSection output;
  /// Normalized key = value echo in file order, for the manifest.
  std::vector<std::pair<std::string, std::string>> echo;
};

ScenarioConfig parse_config(const std::string& text, const std::string& source = "<string>");
ScenarioConfig load_config(const std::string& path);

/// Builds the plant from a preset or inline matrices.
LtiSystem build_system(const SystemSection& s);

/// Parses "[[1, 2], [3, 4]]" (or "[1, 2]" as a single row).
Matrix parse_matrix(const std::string& text);
/// Parses "[1, 2, 3]" or "1, 2, 3".
Vector parse_vector(const std::string& text);

}  // namespace kldobs::bench
