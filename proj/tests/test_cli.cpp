#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "oscstab/errors.hpp"
#include "oscstab/io.hpp"
#include "oscstab/scenario.hpp"

using namespace oscstab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kFigures = fs::path(OSCSTAB_SOURCE_DIR) / "figures";

fs::path scratch(const std::string& name)
{
    auto dir = fs::temp_directory_path() / ("oscstab_test_" + name);
    fs::remove_all(dir);
    return dir;
}

int cli(const std::string& args)
{
    const std::string cmd = std::string(OSCSTAB_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Scenario parse(const std::string& text) { return read_scenario(KeyValueConfig::parse_string(text), "inline"); }

}  // namespace

TEST_CASE("params")
{
    CHECK(cmd_params(0.3, 2.0) == "A = 0.7255942\nW = 3.2412759\n");
}

TEST_CASE("scenario validation")
{
    CHECK_THROWS_AS(parse("r = 1\nfoo = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse("[run]\nhorizon =\n"), ConfigError);
    CHECK_THROWS_AS(parse("[run]\nmodel = spline\n"), ConfigError);
    CHECK_THROWS_AS(parse("[weird]\nx = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse("[pss]\ncandidates = greedy, oracle\n"), ConfigError);
    CHECK_THROWS_AS(parse("T = 2\n[run]\nmechanism = floss\n[floss]\nL = 1\n"), ConfigError);
    const auto sc = parse("r = 1\nT = 2\n[run]\nmodel = dde\ndynamics = convergent\nmu = 0.1, 0.5\nhorizon = 20\n");
    CHECK(sc.mu == std::vector<double>{0.1, 0.5});
    CHECK(sc.horizon == 20.0);
}

TEST_CASE("every shipped figure recipe loads")
{
    int n = 0;
    for (const auto& e : fs::directory_iterator(kFigures)) {
        if (e.path().extension() != ".cfg") continue;
        CAPTURE(e.path().string());
        CHECK_NOTHROW(load_scenario(e.path()));
        ++n;
    }
    CHECK(n >= 7);
}

TEST_CASE("simulate writes schema-valid CSV")
{
    const auto out = scratch("sim");
    const auto res = cmd_simulate(load_scenario(kFigures / "oscillation-structure.cfg"), out, 1, OutputFormat::csv);
    REQUIRE(res.files.size() == 1);
    std::ifstream in(res.files[0]);
    std::string header, row;
    std::getline(in, header);
    CHECK(header == "t,f_alpha,f_beta,c_alpha,c_beta");
    std::getline(in, row);
    CHECK(std::count(row.begin(), row.end(), ',') == 4);
    const auto j = json::parse(res.summary);
    CHECK(j["W"].get<double>() == doctest::Approx(3.2412759403));
}

TEST_CASE("mu sweep produces one trajectory per value")
{
    const auto out = scratch("sweep");
    const auto res = cmd_simulate(load_scenario(kFigures / "convergent-mu.cfg"), out, 1, OutputFormat::csv, 3);
    REQUIRE(res.files.size() == 3);
    const auto j = json::parse(res.summary);
    CHECK(j["runs"][0]["damping"] == "overdamped");
    CHECK(j["runs"][1]["damping"] == "underdamped");
    CHECK(j["runs"][2]["damping"] == "undamped");
}

TEST_CASE("agent runs write an event log")
{
    const auto out = scratch("agents");
    auto sc = load_scenario(kFigures / "mixed-profile.cfg");
    sc.agents = 1000;
    const auto a = cmd_simulate(sc, out, 9, OutputFormat::csv);
    const auto log1 = slurp(out / "mixed-profile_events.csv");
    CHECK(log1.rfind("time,event_kind,flow_id,detail", 0) == 0);
    cmd_simulate(sc, out, 9, OutputFormat::csv);
    CHECK(slurp(out / "mixed-profile_events.csv") == log1);
}

TEST_CASE("json trajectories")
{
    const auto out = scratch("json");
    const auto res = cmd_simulate(load_scenario(kFigures / "oscillation-structure.cfg"), out, 1, OutputFormat::json);
    const auto j = json::parse(slurp(res.files[0]));
    CHECK(j["t"].size() == j["f_alpha"].size());
    CHECK(j["turning_points"].size() > 3);
}

TEST_CASE("pss reports")
{
    const auto out = scratch("pss");
    const auto dev = json::parse(cmd_pss_test(load_scenario(kFigures / "deviation-convergent.cfg"), out, 1,
                                              OutputFormat::json).summary);
    CHECK(dev["verdict"] == "deviation");
    CHECK(dev["deviant"] == "greedy");

    const auto cmp = json::parse(cmd_pss_test(load_scenario(kFigures / "underdamped-inferior.cfg"), out, 1,
                                              OutputFormat::json).summary);
    CHECK(cmp["rows"].size() == 20);
    CHECK(cmp["verdict"] == "deviation");

    const auto overlay =
        json::parse(cmd_pss_test(parse("r = 1\nT = 2\nA0 = 1\n[pss]\noverlay = floss\n"), out, 1, OutputFormat::json)
                        .summary);
    CHECK(overlay["verdict"] == "equilibrium");

    const auto slope = json::parse(
        cmd_pss_test(parse("r = 1\nT = 2\n[pss]\ntest = slope\nq = 0.8\nperiods = 0.5, 1\n"), out, 1,
                     OutputFormat::json)
            .summary);
    CHECK(slope["rows"][1]["analytic"].get<double>() > 0.0);
}

TEST_CASE("mechanism reports")
{
    const auto out = scratch("mech");
    const auto fl = json::parse(cmd_mechanism(load_scenario(kFigures / "floss.cfg"), out, 1, OutputFormat::csv).summary);
    CHECK(fl["incentive"]["verdict"] == "equilibrium");
    CHECK(fl["intervals_used"] == 11);
    const auto header = slurp(out / "floss.csv").substr(0, 80);
    CHECK(header.rfind("t,f_alpha,f_beta,c_alpha,c_beta,interval_index,rho_applied,registered_alpha", 0) == 0);

    const auto cr =
        json::parse(cmd_mechanism(load_scenario(kFigures / "cross-failure.cfg"), out, 1, OutputFormat::csv).summary);
    CHECK(cr["incentive"]["verdict"] == "equilibrium");
    REQUIRE(cr["failures"].size() == 1);
    CHECK(cr["failures"][0]["boundary_time"].get<double>() == 35.0);

    CHECK_THROWS_AS(cmd_mechanism(parse("r = 1\nT = 2\n"), out, 1, OutputFormat::csv), ConfigError);
}

TEST_CASE("exit codes")
{
    const auto out = scratch("exit").string();
    const auto fig = [](const char* n) { return (kFigures / n).string(); };
    CHECK(cli("params --r 0.3 --T 2") == 0);
    CHECK(cli("simulate --scenario " + fig("oscillation-structure.cfg") + " --out " + out + " --seed 1") == 0);
    CHECK(cli("simulate --scenario " + fig("oscillation-structure.cfg") + " --out " + out) == 2);
    CHECK(cli("simulate --scenario /nonexistent.cfg --seed 1") == 2);
    CHECK(cli("simulate --scenario " + fig("oscillation-structure.cfg") + " --seed 1 --format xml") == 2);

    const auto bad = fs::temp_directory_path() / "oscstab_test_empty_horizon.cfg";
    std::ofstream(bad) << "r = 1\nT = 2\n[run]\nhorizon =\n";
    CHECK(cli("simulate --scenario " + bad.string() + " --seed 1 --out " + out) == 2);

    // a converging run cut short cannot yield a relevant span
    const auto shortrun = fs::temp_directory_path() / "oscstab_test_short.cfg";
    std::ofstream(shortrun) << "r = 1\nT = 2\nA0 = 1\n[run]\nhorizon = 6\n[pss]\nincumbent = convergent\nmu = 0.1\n";
    CHECK(cli("pss-test --scenario " + shortrun.string() + " --seed 1 --out " + out) == 3);
}
