#pragma once

#include <cstddef>
#include <string>

namespace oscstab {

/// Outcome of a mechanism's per-case cost comparison.
struct IncentiveReport {
    bool equilibrium = true;
    std::size_t cases = 0;      ///< comparisons evaluated
    std::string violation;      ///< first failing case, empty when equilibrium
};

/// c_M(pi, t) after the end-host's cost-minimizing choice of applying:
/// c_a when entitled, the penalty otherwise.
inline double mechanism_cost(bool entitled, double c_a, double c_p) { return entitled ? c_a : c_p; }

}  // namespace oscstab
