#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "oscstab/mechanism.hpp"
#include "oscstab/model.hpp"

namespace oscstab {

class KeyValueConfig;

struct PathFailure {
    Path path;
    double time;
};

struct CrossConfig {
    double trial_length = 5.0;   ///< L
    double eps = 0.01;           ///< approximate-equality threshold on Delta
    double c_a = 1e-3;
    double c_p = 1e12;
    double c_h = 0x1.0p-20;      ///< cost per hash evaluation
    double sigma_split = 0.005;  ///< std of f_alpha at a trial start
    double backup_share = 0.0;   ///< share of flows holding a backup registration
    std::vector<PathFailure> failures;
    double step = 0.01;
    double horizon = 80.0;

    void validate(const ParallelPathSystem& sys) const;
};

/// `failures = beta@12.5, alpha@40`
CrossConfig read_cross_config(const KeyValueConfig& cfg);

/// E[U_h] = 2^-delta omega - c_h
double expected_hash_utility(double difficulty, double omega, double c_h);

/// Upper bound L - T on the cost gain of an opportunistic switch.
double max_cost_gain(double trial_length, double delay);

/// Real-valued difficulty with E[U_h] > 0 exactly when omega > L - T.
double choose_difficulty(double trial_length, double delay, double c_h);

struct Puzzle {
    Path path;
    double trial_start;
    std::uint64_t host;
    double difficulty;
};

/// h(pi, t_i, e, s) in [0, 1)
double puzzle_hash(const Puzzle& pz, std::uint64_t s);
bool verify_puzzle(const Puzzle& pz, std::uint64_t s);
/// Brute force over s = 0, 1, ...; with several workers the lowest s still wins.
std::optional<std::uint64_t> solve_puzzle(const Puzzle& pz, std::uint64_t max_attempts, unsigned workers = 1);

struct CrossTrial {
    std::size_t index;
    double start;
    double f_alpha;
    double delta;
};

struct FailureEvent {
    Path path;
    double time;
    double immediate_shift;  ///< load moved by backup holders at the failure time
    double boundary_time;    ///< when the remaining flows move
};

struct CrossRun {
    Trajectory trajectory;  ///< hold interpolation
    std::vector<CrossTrial> trials;
    std::size_t trials_used = 0;
    std::optional<double> suspension_time;
    std::vector<FailureEvent> failure_events;

    /// `t,f_alpha,f_beta,c_alpha,c_beta,trial_index,delta_at_trial,backup_share`
    void write_csv(std::ostream& out, double steepness, double backup_share) const;
};

CrossRun simulate_cross(const ParallelPathSystem& sys, const CrossConfig& cfg, std::uint64_t seed);

/// Probability that one trial lands within eps: Phi((1+eps)/2) - Phi((1-eps)/2) under N(1/2, sigma^2).
double convergence_probability(double eps, double sigma_split);

/// Checks the three incentive conditions over a grid of backup valuations.
IncentiveReport cross_incentive_check(const ParallelPathSystem& sys, const CrossConfig& cfg, const CrossRun& run,
                                      const std::vector<double>& omegas);

}  // namespace oscstab
