#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oscstab/errors.hpp"
#include "oscstab/io.hpp"
#include "oscstab/model.hpp"

using namespace oscstab;

TEST_CASE("oscillation parameters")
{
    const auto op = oscillation_params(0.3, 2.0);
    // ln(2e^0.6 - 1)/0.3 and 1 - 1/(2e^0.6), evaluated to 30 digits elsewhere
    CHECK(op.amplitude == doctest::Approx(0.725594181952987).epsilon(1e-13));
    CHECK(op.half_period == doctest::Approx(3.241275940299851).epsilon(1e-13));

    const auto one = oscillation_params(1.0, 1.0);
    CHECK(one.amplitude == doctest::Approx(1.0 - 0.5 / std::exp(1.0)));
    CHECK(one.half_period == doctest::Approx(std::log(2.0 * std::exp(1.0) - 1.0)));

    // small rT: A -> 1/2 and W -> 2T
    const auto tiny = oscillation_params(1e-6, 1.0);
    CHECK(tiny.amplitude == doctest::Approx(0.5).epsilon(1e-5));
    CHECK(tiny.half_period == doctest::Approx(2.0).epsilon(1e-5));

    CHECK_THROWS_AS(oscillation_params(0.0, 1.0), DomainError);
    CHECK_THROWS_AS(oscillation_params(1.0, 0.0), DomainError);
}

TEST_CASE("mixed amplitude reduces to greedy")
{
    CHECK(mixed_amplitude(1.0, 0.3, 2.0) == doctest::Approx(oscillation_params(0.3, 2.0).amplitude));
    CHECK(mixed_amplitude(0.8, 1.0, 2.0) == doctest::Approx(-0.3 * std::exp(-2.0) + 0.8));
}

TEST_CASE("path cost")
{
    CHECK(cost_of(0.5, 1.0) == 0.5);
    CHECK(cost_of(0.5, 2.0) == 0.25);
    CHECK(cost_of(0.0, 3.0) == 0.0);
    CHECK_THROWS_AS(cost_of(1.5, 1.0), DomainError);
    CHECK_THROWS_AS(cost_of(0.5, 0.5), DomainError);
    CHECK(path_cost(0.9, 1.0) > path_cost(0.1, 1.0));
    CHECK(PathCost::failure() > path_cost(1.0, 1.0));
}

TEST_CASE("greedy closed form")
{
    ParallelPathSystem sys{0.3, 1.0, 2.0, 1.0};
    const auto op = oscillation_params(0.3, 2.0);
    SUBCASE("decays until the first turning point")
    {
        CHECK(greedy_closed_form(sys, 0.0) == 1.0);
        CHECK(greedy_closed_form(sys, 1.0) == doctest::Approx(std::exp(-0.3)));
    }
    SUBCASE("periodic with period 2W and peak A")
    {
        sys.initial_load = op.amplitude;
        CHECK(greedy_closed_form(sys, 0.0) == doctest::Approx(op.amplitude));
        for (double t : {0.3, 1.7, 2.9, 5.0}) {
            CHECK(greedy_closed_form(sys, t + 2.0 * op.half_period) == doctest::Approx(greedy_closed_form(sys, t)));
        }
        CHECK(greedy_closed_form(sys, op.half_period) == doctest::Approx(1.0 - op.amplitude));
        double hi = 0.0, lo = 1.0;
        for (double t = 0.0; t < 20.0; t += 0.01) {
            hi = std::max(hi, greedy_closed_form(sys, t));
            lo = std::min(lo, greedy_closed_form(sys, t));
        }
        CHECK(hi <= op.amplitude + 1e-12);
        CHECK(lo >= 1.0 - op.amplitude - 1e-12);
    }
    SUBCASE("T = 0 settles at equal load")
    {
        sys.delay = 0.0;
        CHECK(greedy_closed_form(sys, 100.0) == doctest::Approx(0.5));
        CHECK(greedy_closed_form(sys, 0.5) == doctest::Approx(std::max(std::exp(-0.15), 0.5)));
    }
    SUBCASE("requires universal greedy")
    {
        sys.profile = {{"greedy", 0.5}, {"antagonist", 0.5}};
        CHECK_THROWS_AS(greedy_closed_form(sys, 1.0), DomainError);
    }
}

TEST_CASE("mixed profile limits")
{
    ParallelPathSystem sys{1.0, 1.0, 2.0, 0.9};
    CHECK(mixed_profile_closed_form(0.3, sys, 200.0) == doctest::Approx(0.7).epsilon(1e-9));
    CHECK(limit_imbalance(0.3).regime == Regime::stable);
    CHECK(limit_imbalance(0.3).limit == doctest::Approx(0.4));
    CHECK(limit_imbalance(0.5).regime == Regime::stable_equal_load);
    CHECK(limit_imbalance(0.8).regime == Regime::oscillating);

    const auto tp = mixed_turning_points(0.8, sys, 40.0);
    REQUIRE(tp.size() >= 3);
    const double W = oscillation_params(1.0, 2.0).half_period;
    for (std::size_t i = 1; i < tp.size(); ++i) CHECK(tp[i] - tp[i - 1] == doctest::Approx(W));
}

TEST_CASE("trajectory interpolation and classification")
{
    std::vector<double> f(101);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = 0.5 + 0.1 * std::sin(static_cast<double>(i) * 0.5);
    Trajectory traj(0.0, 0.5, f);
    CHECK(traj.end() == 50.0);
    CHECK(traj.load_at(10.25) == doctest::Approx(0.5 + 0.1 * std::sin(10.25)).epsilon(1e-4));
    CHECK_THROWS_AS(traj.load_at(60.0), OutOfRange);
    CHECK(classify(traj).regime == Regime::oscillating);

    Trajectory flat(0.0, 1.0, std::vector<double>(50, 0.5));
    CHECK(classify(flat).regime == Regime::stable_equal_load);

    Trajectory biased(0.0, 1.0, std::vector<double>(50, 0.7));
    const auto c = classify(biased);
    CHECK(c.regime == Regime::stable);
    CHECK(c.limit == doctest::Approx(0.4));

    std::vector<double> bad{0.5, NAN};
    CHECK_THROWS_AS(Trajectory(0.0, 1.0, bad), NonFinite);
}

TEST_CASE("classification of sampled closed forms")
{
    ParallelPathSystem sys{1.0, 1.0, 2.0, 0.9};
    CHECK(classify(sample_mixed(0.3, sys, 100.0, 0.01)).limit == doctest::Approx(0.4).epsilon(1e-6));
    CHECK(classify(sample_mixed(0.5, sys, 100.0, 0.01)).regime == Regime::stable_equal_load);
    CHECK(classify(sample_mixed(1.0, sys, 100.0, 0.01)).regime == Regime::oscillating);
}

TEST_CASE("system configuration")
{
    auto cfg = KeyValueConfig::parse_string("r = 0.3\nT = 2\nA0 = A\n[profile]\ngreedy = 0.6\nantagonist = 0.4\n");
    const auto sys = read_system(cfg);
    CHECK(sys.rate == 0.3);
    CHECK(sys.initial_load == doctest::Approx(oscillation_params(0.3, 2.0).amplitude));
    CHECK(sys.share("antagonist") == 0.4);
    CHECK(sys.share("convergent") == 0.0);

    std::ostringstream out;
    write_system(sys, out);
    const auto back = read_system(KeyValueConfig::parse_string(out.str()));
    CHECK(back.initial_load == sys.initial_load);
    CHECK(back.profile == sys.profile);

    CHECK_THROWS_AS(read_system(KeyValueConfig::parse_string("A0 = 0.2\n")), ConfigError);
    CHECK_THROWS_AS(read_system(KeyValueConfig::parse_string("[profile]\ngreedy = 0.5\n")), ConfigError);
    CHECK_THROWS_AS(read_system(KeyValueConfig::parse_string("p = 0.5\n")), ConfigError);
    CHECK_THROWS_AS(KeyValueConfig::parse_string("r 0.3\n"), ConfigError);
    CHECK_THROWS_AS(parse_number("1.5x", "value"), ConfigError);
    CHECK(parse_number_list("1, 2.5,3", "list") == std::vector<double>{1.0, 2.5, 3.0});
}
