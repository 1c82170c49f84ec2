#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "oscstab/model.hpp"

namespace oscstab {

/// Exact integral of the piecewise-cubic reconstruction of c_pi over a
/// trajectory. Stencils never straddle a recorded turning point, where the
/// load has a kink; hold trajectories integrate piecewise constant.
class PathCostIntegral {
public:
    PathCostIntegral(const Trajectory& traj, double steepness);

    /// int_a^b c_pi(s) ds
    double integral(Path p, double a, double b) const;

private:
    double cumulative(Path p, double t) const;
    double cell(Path p, std::size_t i, double xa, double xb) const;
    double piece(Path p, std::size_t j, double xa, double xb) const;
    std::size_t stencil(std::size_t i) const;
    bool kink_inside(double a, double b) const;

    const Trajectory* traj_;
    std::vector<double> cost_[2];
    std::vector<double> cum_[2];
    std::vector<double> kinks_;  // turning points in local grid units
};

/// Costs as seen by an end-host: actual loads from the trajectory, stale
/// loads T earlier (the constant initial load before the trajectory starts).
class CostView {
public:
    CostView(const ParallelPathSystem& sys, const Trajectory& traj);

    const ParallelPathSystem& system() const { return *sys_; }
    const Trajectory& trajectory() const { return *traj_; }

    double load(Path p, double t) const { return traj_->load_at(p, t); }
    double cost(Path p, double t) const { return cost_of(load(p, t), sys_->steepness); }
    double stale_load(Path p, double t) const;
    double stale_cost(Path p, double t) const { return cost_of(stale_load(p, t), sys_->steepness); }
    /// Perceived cheaper path, or nullopt on a tie.
    std::optional<Path> perceived_cheaper(double t) const;

    /// (1/R) int_t^{t+R} c_pi(s) ds
    double usage_cost(Path p, double t, double period) const;

private:
    const ParallelPathSystem* sys_;
    const Trajectory* traj_;
    PathCostIntegral integral_;
};

double usage_cost(const ParallelPathSystem& sys, const Trajectory& traj, Path p, double t, double period);

struct Strategy {
    std::string id;
    double period = 1.0;  ///< R
    /// u(to, t | from)
    std::function<double(Path to, Path from, double t, const CostView& view)> select;
    /// y(pi | t); when empty it is evolved by the one-agent master equation.
    std::function<double(Path p, double t, const CostView& view)> occupancy;
};

Strategy greedy_strategy(double period);
Strategy antagonist_strategy(double period);
Strategy convergent_strategy(double mu, double period);
/// Greedy with probability q', antagonist otherwise.
Strategy mixed_strategy(double greedy_probability, double period);
Strategy stay_strategy(double period);

/// Mechanism-imposed cost c_M(to, t | from), added to the usage cost.
using CostOverlay = std::function<double(Path to, Path from, double t)>;

/// C(sigma, t) with the perception read at `t` (default) or at a nearby time.
double strategy_cost_at(const Strategy& s, const CostView& view, double t, const CostOverlay& overlay = {});

struct RelevantSpan {
    double t0 = 0.0;
    double t1 = 0.0;
    bool empty = false;     ///< trajectory already at equal load; costs are 1/2^p
    bool periodic = false;  ///< one turning-point interval of a periodic trajectory

    double length() const { return t1 - t0; }
};

/// Converging trajectories give [start, t_delta]; periodic ones give the
/// latest turning-point interval that leaves `lookahead` room before the end.
RelevantSpan relevant_span(const Trajectory& traj, double delta = 1e-3, double lookahead = 0.0);

double strategy_cost(const Strategy& s, const CostView& view, const RelevantSpan& span,
                     const CostOverlay& overlay = {});
double strategy_cost(const Strategy& s, const ParallelPathSystem& sys, const Trajectory& traj,
                     const RelevantSpan& span);

struct CostReport {
    std::string incumbent;
    double incumbent_cost = 0.0;
    std::vector<std::pair<std::string, double>> candidates;
    bool equilibrium = true;
    std::string deviant;  ///< best deviating candidate when !equilibrium
    double gain = 0.0;    ///< incumbent cost minus deviant cost
    RelevantSpan span;
};

inline constexpr double kDeviationThreshold = 1e-9;

/// Costs of the incumbent and each candidate on the incumbent-induced trajectory.
CostReport pss_deviation_test(const ParallelPathSystem& sys, const Trajectory& traj, const Strategy& incumbent,
                              const std::vector<Strategy>& candidates, double delta = 1e-3,
                              const CostOverlay& overlay = {});

struct SlopeResult {
    double analytic;
    double numeric;    ///< C(sigma_p(1)) - C(sigma_p(0))
    double intercept;  ///< C(sigma_p(0))
};

/// Slope of C(sigma_p(q')) in q' on the periodic greedy/antagonist system with p = 1.
double mixed_strategy_slope_analytic(double q, double rate, double period, double delay);
SlopeResult mixed_strategy_slope(double q, double rate, double period, double delay);

/// T such that the half period W equals R.
double delay_for_half_period(double period, double rate);

struct ComparisonRow {
    double period;
    double cost_greedy;
    double cost_convergent;
};

/// Greedy and convergent costs on the trajectory of universal convergent adoption.
std::vector<ComparisonRow> compare_greedy_vs_convergent(const ParallelPathSystem& sys, double mu,
                                                        const std::vector<double>& periods, double delta = 1e-3);

}  // namespace oscstab
