#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace oscstab {

class KeyValueConfig;

enum class Path : std::uint8_t { alpha = 0, beta = 1 };

constexpr Path other(Path p) { return p == Path::alpha ? Path::beta : Path::alpha; }
constexpr std::size_t index(Path p) { return static_cast<std::size_t>(p); }
std::string_view to_string(Path p);
Path path_from_string(std::string_view name);

inline constexpr Path kPaths[] = {Path::alpha, Path::beta};

/// Loads closer than this to [0, 1] are snapped onto the interval.
inline constexpr double kLoadSnap = 1e-12;

/// Two-path system with unit demand. The higher-loaded path at t = 0 is
/// alpha by convention, so the initial load lies in [1/2, 1].
struct ParallelPathSystem {
    double rate = 1.0;          ///< r: re-evaluations per end-host and time unit
    double steepness = 1.0;     ///< p: path cost is load^p
    double delay = 0.0;         ///< T: staleness of observed costs
    double initial_load = 1.0;  ///< A0: f_alpha(0)
    std::map<std::string, double, std::less<>> profile{{"greedy", 1.0}};

    bool oscillation_prone() const { return delay > 0.0; }
    double share(std::string_view strategy) const;

    /// Throws ConfigError on the first violated invariant.
    void validate() const;
};

ParallelPathSystem read_system(const KeyValueConfig& cfg);
void write_system(const ParallelPathSystem& sys, std::ostream& out);

/// Load-dependent cost of one path. A failed path compares above every
/// finite cost.
struct PathCost {
    double value = 0.0;
    bool failed = false;

    static PathCost failure() { return {0.0, true}; }

    friend std::partial_ordering operator<=>(const PathCost& a, const PathCost& b)
    {
        if (a.failed || b.failed) return a.failed <=> b.failed;
        return a.value <=> b.value;
    }
    friend bool operator==(const PathCost& a, const PathCost& b) { return (a <=> b) == 0; }
};

PathCost path_cost(double load, double steepness);

/// Plain-number cost `load^p` with the same domain checks as path_cost.
double cost_of(double load, double steepness);

struct OscillationParams {
    double amplitude;    ///< A: peak load of the periodic regime
    double half_period;  ///< W: spacing of consecutive turning points
};

OscillationParams oscillation_params(double rate, double delay);

/// Amplitude of the periodic regime when a share q > 1/2 plays greedy and the
/// rest plays antagonist. Reduces to oscillation_params().amplitude at q = 1.
double mixed_amplitude(double greedy_share, double rate, double delay);

enum class Regime { oscillating, stable, stable_equal_load };

struct Classification {
    Regime regime = Regime::oscillating;
    double limit = 0.0;  ///< Delta* for stable regimes

    friend bool operator==(const Classification&, const Classification&) = default;
};

std::string_view to_string(Regime r);

/// Uniformly sampled load trajectory of path alpha; f_beta = 1 - f_alpha.
class Trajectory {
public:
    /// How values between samples are reconstructed.
    enum class Interpolation {
        cubic,  ///< smooth dynamics
        hold,   ///< piecewise constant, sample i holds on [t_i, t_{i+1})
    };

    Trajectory() = default;
    Trajectory(double start, double step, std::vector<double> load_alpha,
               Interpolation interpolation = Interpolation::cubic);

    std::size_t size() const { return loads_.size(); }
    bool empty() const { return loads_.empty(); }
    double start() const { return start_; }
    double step() const { return step_; }
    double end() const { return start_ + step_ * static_cast<double>(loads_.empty() ? 0 : loads_.size() - 1); }
    double time(std::size_t i) const { return start_ + step_ * static_cast<double>(i); }
    double load(std::size_t i) const { return loads_[i]; }
    double load(Path p, std::size_t i) const { return p == Path::alpha ? loads_[i] : 1.0 - loads_[i]; }
    double imbalance(std::size_t i) const;
    std::span<const double> loads() const { return loads_; }
    Interpolation interpolation() const { return interpolation_; }

    bool covers(double t) const;
    /// Load of alpha at an arbitrary time inside the sampled span.
    double load_at(double t) const;
    double load_at(Path p, double t) const { return p == Path::alpha ? load_at(t) : 1.0 - load_at(t); }

    const std::vector<double>& turning_points() const { return turning_points_; }
    void set_turning_points(std::vector<double> tp);

    /// `t,f_alpha,f_beta,c_alpha,c_beta`
    void write_csv(std::ostream& out, double steepness) const;

private:
    double start_ = 0.0;
    double step_ = 1.0;
    std::vector<double> loads_;
    std::vector<double> turning_points_;
    Interpolation interpolation_ = Interpolation::cubic;
};

/// Cubic Lagrange interpolation on four uniformly spaced nodes at local
/// coordinates 0..3, evaluated at local coordinate x.
double cubic_lagrange(const double (&y)[4], double x);

/// Universal-greedy load of alpha. Periodic with period 2W after the first
/// turning point; for A0 = A the periodic regime starts at t = 0.
double greedy_closed_form(const ParallelPathSystem& sys, double t);

/// Greedy share q, antagonist share 1 - q. For q <= 1/2 the load decays
/// monotonically to 1 - q; for q > 1/2 it becomes periodic after the first
/// turning point with amplitude mixed_amplitude(q) and half period W.
double mixed_profile_closed_form(double greedy_share, const ParallelPathSystem& sys, double t);

/// Turning points of mixed_profile_closed_form in [0, horizon].
std::vector<double> mixed_turning_points(double greedy_share, const ParallelPathSystem& sys, double horizon);

Trajectory sample_greedy(const ParallelPathSystem& sys, double horizon, double step);
Trajectory sample_mixed(double greedy_share, const ParallelPathSystem& sys, double horizon, double step);

/// Limit behaviour of the greedy/antagonist mix: Delta* = 1 - 2q below one half,
/// equal load at one half, oscillation above.
Classification limit_imbalance(double greedy_share);

struct ClassifyOptions {
    double threshold = 1e-3;     ///< delta
    double tail_fraction = 0.25;
};

/// Classifies the long-run behaviour from the tail of a trajectory.
/// Throws Inconclusive when the tail neither settles nor oscillates with a
/// persistent envelope.
Classification classify(const Trajectory& traj, const ClassifyOptions& opt = {});

}  // namespace oscstab
