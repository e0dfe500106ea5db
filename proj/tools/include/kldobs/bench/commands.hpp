#pragma once

// Subcommands of the kldobs harness. Each writes one bundle under the
// configured output directory; a failing stage removes what was written.

#include <cstdint>
#include <optional>
#include <string>

#include "kldobs/bench/config.hpp"

namespace kldobs::bench {

/// Command-line flags that take precedence over the config file.
struct Overrides {
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> decimate;
  std::optional<MethodChoice> method;
  std::optional<std::string> instant;
  bool timings = false;
};

/// Throws ConfigError when the result is inconsistent.
void apply_overrides(ScenarioConfig& cfg, const Overrides& o);

/// 0 success, 2 config error, 3 synthesis infeasible, 4 numerical failure.
int exit_code_for(ErrorKind kind);

void cmd_design(const ScenarioConfig& cfg);
void cmd_attack(const ScenarioConfig& cfg);
void cmd_simulate(const ScenarioConfig& cfg);
void cmd_montecarlo(const ScenarioConfig& cfg);
void cmd_run(const ScenarioConfig& cfg);

/// The step (sensors 1, 3, 5; 300 steps, onset 100) and ramp (sensors
/// 1, 2, 3, 5; 800 steps, onset 200, beta 0.01) thermal scenarios, written
/// to `step/` and `ramp/` of one bundle.
ScenarioConfig thermal_step_scenario();
ScenarioConfig thermal_ramp_scenario();
void cmd_reproduce_thermal(const Overrides& o);

}  // namespace kldobs::bench
