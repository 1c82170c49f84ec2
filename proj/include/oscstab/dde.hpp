#pragma once

#include <functional>
#include <map>
#include <string>

#include "oscstab/model.hpp"

namespace oscstab {

/// Right-hand side of df_alpha/dt given the current and the stale load.
struct Dynamics {
    std::string name;
    std::map<std::string, double, std::less<>> params;
    std::function<double(double t, double f, double f_stale, const ParallelPathSystem& sys)> rhs;
};

/// Initial segment of f_alpha on [-T, 0].
struct History {
    std::function<double(double t)> segment;

    static History constant(double f0);
    double operator()(double t) const { return segment(t); }
};

Dynamics greedy_dynamics();
Dynamics convergent_dynamics(double mu);
/// Same rhs as convergent_dynamics(gamma / 2); the factory checks this pointwise.
Dynamics mate_dynamics(double gamma);

/// Look up shipped dynamics by name ("greedy", "convergent", "mate") with
/// parameters mu / gamma.
Dynamics dynamics_by_name(std::string_view name, const std::map<std::string, double, std::less<>>& params);

struct Allocation {
    double alpha;
    double beta;
};

/// One projected MATE step of a single end-host with demand d = F_alpha + F_beta.
/// The change on alpha equals gamma/2 (c_beta - c_alpha) before clipping to [0, d].
Allocation mate_step(Allocation current, double c_alpha_stale, double c_beta_stale, double gamma);

struct IntegrateOptions {
    double escape_low = -0.1;  ///< NonFinite below this
    double escape_high = 1.1;  ///< NonFinite above this
};

/// Method of steps with classical RK4 on a uniform grid. The delayed term is
/// read from stored samples by cubic interpolation. Sign changes of
/// f(t - T) - 1/2 inside a step are bisected and recorded as turning points.
Trajectory integrate(const ParallelPathSystem& sys, const Dynamics& dyn, const History& history, double horizon,
                     double step, const IntegrateOptions& opt = {});

/// Convenience: constant history at sys.initial_load, step T/1000.
Trajectory integrate(const ParallelPathSystem& sys, const Dynamics& dyn, double horizon);

enum class Damping { undamped, underdamped, overdamped };
std::string_view to_string(Damping d);

struct DampingVerdict {
    Damping kind;
    double envelope_ratio;   ///< last successive peak ratio (0 when no crossings)
    std::size_t crossings;   ///< crossings of f_alpha = 1/2 after t = 0
};

DampingVerdict classify_damping(const Trajectory& traj);

}  // namespace oscstab
