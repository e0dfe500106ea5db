#pragma once

// The six-room thermal plant: six states, four actuated rooms, five vent
// sensors each averaging two rooms.

#include <string>
#include <vector>

#include "kldobs/plant.hpp"

namespace kldobs::bench {

/// B_w = 0.1 [I_6 0], D_w = 0.1 [0 I_5].
LtiSystem preset_thermal();

std::vector<std::string> preset_names();

/// Throws kConfig for unknown names.
LtiSystem preset(const std::string& name);

}  // namespace kldobs::bench
