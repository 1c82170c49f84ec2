#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "oscstab/mechanism.hpp"
#include "oscstab/model.hpp"
#include "oscstab/strategy_cost.hpp"

namespace oscstab {

class KeyValueConfig;

struct FlossConfig {
    enum class Mode { fluid, stochastic };
    enum class InitialSplit { injected, fair };

    double interval_length = 5.0;  ///< L
    double c_a = 1e-3;
    double c_p = 1e12;             ///< penalty sentinel, dominates every path cost
    double kappa = 0.5;            ///< fraction of the maximal allowance applied
    double delta_stop = 1e-3;
    Mode mode = Mode::fluid;
    InitialSplit initial = InitialSplit::injected;  ///< injected: f_alpha(t0) = A0
    std::size_t flows = 10000;     ///< stochastic mode only
    double step = 0.01;            ///< output sampling
    double horizon = 80.0;

    void validate(const ParallelPathSystem& sys) const;
};

FlossConfig read_floss_config(const KeyValueConfig& cfg);

/// Largest rho with f_cheap + rho f_exp <= (1 - rho) f_exp.
double max_allowance(double f_cheap, double f_expensive);

struct FlossInterval {
    std::size_t index;
    double start;
    double f_alpha;          ///< constant load during the interval
    double delta;
    double rho_applied;      ///< allowance granted at the start of the interval
    Path cheaper;            ///< cheaper path during the interval
    double migrated;         ///< load that moved at the start of the interval
};

struct FlossRun {
    Trajectory trajectory;   ///< hold interpolation
    std::vector<FlossInterval> intervals;
    std::size_t intervals_used = 0;   ///< enforced intervals
    std::size_t migrations = 0;       ///< intervals with nonzero allowance
    std::optional<double> suspension_time;

    /// `t,f_alpha,f_beta,c_alpha,c_beta,interval_index,rho_applied,registered_alpha`
    void write_csv(std::ostream& out, double steepness) const;
};

FlossRun simulate_floss(const ParallelPathSystem& sys, const FlossConfig& cfg, std::uint64_t seed);

/// E_e(pi, t)
using Entitlement = std::function<bool(Path, double)>;

/// u_F: 1/2 at t0, switch only when entitled and perceived cheaper.
Strategy floss_strategy(Entitlement entitled, double t0, double period);

/// Per enforced interval and per current path, checks that u_F's choice is
/// cost-minimal against the alternatives with and without entitlement.
IncentiveReport floss_incentive_check(const ParallelPathSystem& sys, const FlossConfig& cfg, const FlossRun& run);

/// Load on the high-multiplicity egress group where
/// x^p + n_hi c_a = (1 - x)^p + n_lo c_a.
double unequal_load_equilibrium(double n_hi, double n_lo, double p, double c_a);

}  // namespace oscstab
