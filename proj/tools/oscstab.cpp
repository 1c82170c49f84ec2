// oscstab command-line front end.
#include <CLI11.hpp>

#include <iostream>
#include <stdexcept>

#include "oscstab/errors.hpp"
#include "oscstab/scenario.hpp"

namespace {

int run(int argc, char** argv)
{
    using namespace oscstab;
    CLI::App app{"Oscillation and stabilization toolkit for selfish path selection"};
    app.require_subcommand(1);

    double r = 0.0, T = 0.0;
    auto* params = app.add_subcommand("params", "print A and W of the greedy oscillation");
    params->add_option("--r", r, "re-evaluation rate")->required();
    params->add_option("--T", T, "staleness")->required();

    std::string scenario, out = "out", format = "csv";
    std::uint64_t seed = 0;
    unsigned workers = 0;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--scenario", scenario, "scenario file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory");
        sub->add_option("--seed", seed, "RNG seed")->required();
        sub->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    };
    auto* simulate = app.add_subcommand("simulate", "write trajectories for a scenario");
    common(simulate);
    simulate->add_option("--workers", workers, "threads for parameter sweeps (0 = all cores)");
    auto* pss = app.add_subcommand("pss-test", "strategy costs and deviation verdict");
    common(pss);
    auto* mech = app.add_subcommand("mechanism", "FLOSS or CROSS run with incentive check");
    common(mech);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (params->parsed()) {
            std::cout << cmd_params(r, T);
            return 0;
        }
        const auto sc = load_scenario(scenario);
        const auto fmt = format_from_string(format);
        RunOutput res;
        if (simulate->parsed()) res = cmd_simulate(sc, out, seed, fmt, workers);
        else if (pss->parsed()) res = cmd_pss_test(sc, out, seed, fmt);
        else res = cmd_mechanism(sc, out, seed, fmt);
        std::cout << res.summary << '\n';
        for (const auto& f : res.files) std::cerr << "wrote " << f.string() << '\n';
        return 0;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
