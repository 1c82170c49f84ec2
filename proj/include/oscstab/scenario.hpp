#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "oscstab/agent_sim.hpp"
#include "oscstab/cross.hpp"
#include "oscstab/floss.hpp"
#include "oscstab/model.hpp"

namespace oscstab {

class KeyValueConfig;

/// Everything one scenario file describes. See figures/README.md for the keys.
struct Scenario {
    std::string name;
    ParallelPathSystem sys;

    // [run]
    std::string model = "closed-form";  ///< closed-form | dde | agents
    std::optional<double> horizon;
    std::optional<double> step;
    std::string dynamics = "greedy";    ///< greedy | convergent | mate
    std::vector<double> mu;             ///< a list sweeps
    std::vector<double> gamma;
    std::size_t agents = 10000;
    MechanismKind agent_mechanism = MechanismKind::none;
    std::optional<double> perception_threshold;

    // [mechanism]
    std::optional<MechanismKind> mechanism;
    FlossConfig floss;
    CrossConfig cross;
    std::vector<double> omegas;         ///< backup valuations for the CROSS check

    // [pss]
    std::string pss_test = "deviation";  ///< deviation | compare | slope
    std::string incumbent = "convergent";
    std::vector<std::string> candidates{"greedy"};
    double pss_mu = 0.5;
    double period = 1.0;                 ///< R
    double delta = 1e-3;
    std::vector<double> periods;         ///< R grid for compare / slope
    double greedy_share = 0.8;           ///< q for slope
    std::string overlay = "none";        ///< none | floss
};

Scenario read_scenario(const KeyValueConfig& cfg, std::string name);
Scenario load_scenario(const std::filesystem::path& file);

enum class OutputFormat { csv, json };
OutputFormat format_from_string(std::string_view s);

struct RunOutput {
    std::vector<std::filesystem::path> files;
    std::string summary;  ///< JSON document
};

/// Trajectory files for the closed form, the DDE engine or the agent simulator.
/// Sweeps over mu / gamma fan out over `workers` threads.
RunOutput cmd_simulate(const Scenario& sc, const std::filesystem::path& out, std::uint64_t seed, OutputFormat fmt,
                       unsigned workers = 0);

/// Cost report for deviation tests, greedy-vs-convergent tables or mixed slopes.
RunOutput cmd_pss_test(const Scenario& sc, const std::filesystem::path& out, std::uint64_t seed, OutputFormat fmt);

/// FLOSS or CROSS run plus its incentive check.
RunOutput cmd_mechanism(const Scenario& sc, const std::filesystem::path& out, std::uint64_t seed, OutputFormat fmt);

/// `A = ..., W = ...`
std::string cmd_params(double rate, double delay);

}  // namespace oscstab
