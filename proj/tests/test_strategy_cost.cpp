#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oscstab/dde.hpp"
#include "oscstab/errors.hpp"
#include "oscstab/strategy_cost.hpp"

using namespace oscstab;

TEST_CASE("cost integral is exact on polynomial loads")
{
    // f(t) = 0.5 + 0.01 t^3 on [0, 4]: integral of c_alpha = 2 + 0.01 * 64
    std::vector<double> f(41);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double t = 0.1 * static_cast<double>(i);
        f[i] = 0.2 + 0.01 * t * t * t;
    }
    Trajectory traj(0.0, 0.1, f);
    PathCostIntegral I(traj, 1.0);
    CHECK(I.integral(Path::alpha, 0.0, 4.0) == doctest::Approx(0.8 + 0.64).epsilon(1e-12));
    CHECK(I.integral(Path::beta, 1.0, 3.0) == doctest::Approx(2.0 - (0.4 + 0.01 * (81.0 - 1.0) / 4.0)).epsilon(1e-12));
    CHECK(I.integral(Path::alpha, 2.0, 2.0) == 0.0);
}

TEST_CASE("every strategy costs 1/2^p at equal load")
{
    for (double p : {1.0, 2.0}) {
        ParallelPathSystem sys{1.0, p, 2.0, 0.5};
        Trajectory traj(0.0, 0.01, std::vector<double>(2001, 0.5));
        CostView view(sys, traj);
        const RelevantSpan span{0.0, 10.0, false, false};
        for (const auto& s : {greedy_strategy(1.0), antagonist_strategy(1.0), convergent_strategy(0.5, 1.0),
                              mixed_strategy(0.3, 1.0), stay_strategy(1.0)}) {
            CAPTURE(s.id);
            CHECK(strategy_cost(s, view, span) == doctest::Approx(std::pow(0.5, p)).epsilon(1e-14));
        }
        CHECK(relevant_span(traj).empty);
    }
}

TEST_CASE("relevant span")
{
    ParallelPathSystem sys{1.0, 1.0, 2.0, 0.9};
    const double W = oscillation_params(1.0, 2.0).half_period;
    SUBCASE("periodic trajectories give one turning-point interval")
    {
        const auto traj = sample_mixed(1.0, sys, 30.0, 0.01);
        const auto span = relevant_span(traj, 1e-3, 1.0);
        CHECK(span.periodic);
        CHECK(span.length() == doctest::Approx(W));
        CHECK(span.t1 + 1.0 <= traj.end());
    }
    SUBCASE("converging trajectories run until the threshold")
    {
        const auto traj = integrate(sys, convergent_dynamics(0.1), 100.0);
        const auto span = relevant_span(traj, 1e-3);
        CHECK_FALSE(span.periodic);
        CHECK(span.t0 == 0.0);
        CHECK(std::abs(traj.load_at(span.t1) - 0.5) == doctest::Approx(0.5e-3).epsilon(1e-3));
    }
    SUBCASE("short horizons are inconclusive")
    {
        const auto traj = integrate(sys, convergent_dynamics(0.1), 6.0);
        CHECK_THROWS_AS(relevant_span(traj, 1e-3), Inconclusive);
    }
}

TEST_CASE("deviation tests on convergent adoption")
{
    ParallelPathSystem sys{1.0, 1.0, 2.0, 1.0};
    for (double mu : {0.5, 0.1}) {
        CAPTURE(mu);
        const auto traj = integrate(sys, convergent_dynamics(mu), 100.0);
        const auto rep = pss_deviation_test(sys, traj, convergent_strategy(mu, 1.0), {greedy_strategy(1.0)});
        CHECK_FALSE(rep.equilibrium);
        CHECK(rep.deviant == "greedy");
        CHECK(rep.gain > kDeviationThreshold);
    }
}

TEST_CASE("a strategy never deviates from itself")
{
    ParallelPathSystem sys{1.0, 1.0, 2.0, 1.0};
    const auto traj = integrate(sys, convergent_dynamics(0.5), 100.0);
    const auto rep = pss_deviation_test(sys, traj, convergent_strategy(0.5, 1.0), {convergent_strategy(0.5, 1.0)});
    CHECK(rep.equilibrium);
}

TEST_CASE("a uniform overlay shifts every cost by the same amount")
{
    ParallelPathSystem sys{1.0, 1.0, 2.0, 1.0};
    const auto traj = integrate(sys, convergent_dynamics(0.5), 100.0);
    const CostOverlay flat = [](Path, Path, double) { return 1e-3; };
    const auto base = pss_deviation_test(sys, traj, convergent_strategy(0.5, 1.0), {greedy_strategy(1.0)});
    const auto shifted =
        pss_deviation_test(sys, traj, convergent_strategy(0.5, 1.0), {greedy_strategy(1.0)}, 1e-3, flat);
    CHECK(shifted.incumbent_cost == doctest::Approx(base.incumbent_cost + 1e-3).epsilon(1e-12));
    CHECK(shifted.candidates[0].second == doctest::Approx(base.candidates[0].second + 1e-3).epsilon(1e-12));
    CHECK(shifted.gain == doctest::Approx(base.gain).epsilon(1e-9));
}

TEST_CASE("mixed strategy cost is linear in the mixing probability")
{
    const double q = 0.8, r = 1.0, T = 2.0, R = 1.0;
    const double W = oscillation_params(r, T).half_period;
    ParallelPathSystem sys{r, 1.0, T, mixed_amplitude(q, r, T)};
    sys.profile = {{"greedy", q}, {"antagonist", 1.0 - q}};
    const auto traj = sample_mixed(q, sys, 3.01 * W, W / 20000.0);
    CostView view(sys, traj);
    const RelevantSpan span{W, 2.0 * W, false, true};
    std::vector<double> c;
    for (double qp : {0.0, 0.25, 0.5, 0.75, 1.0}) c.push_back(strategy_cost(mixed_strategy(qp, R), view, span));
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double line = c[0] + (c[4] - c[0]) * 0.25 * static_cast<double>(i);
        CHECK(std::abs(c[i] - line) < 1e-8);
    }
}

TEST_CASE("analytic slope")
{
    const auto s = mixed_strategy_slope(0.8, 1.0, 1.0, 2.0);
    CHECK(s.analytic > 0.0);
    CHECK(std::abs(s.numeric - s.analytic) <= 1e-6 * std::abs(s.analytic));
    // q just above one half stays finite
    CHECK(std::isfinite(mixed_strategy_slope_analytic(0.5 + 1e-12, 1.0, 1.0, 2.0)));
    CHECK_THROWS_AS(mixed_strategy_slope(0.8, 1.0, 10.0, 2.0), DomainError);
    CHECK_THROWS_AS(mixed_strategy_slope(0.4, 1.0, 1.0, 2.0), DomainError);
}

TEST_CASE("delay for a given half period")
{
    for (double R : {0.1, 0.5, 1.0}) {
        const double T = delay_for_half_period(R, 0.7);
        CHECK(oscillation_params(0.7, T).half_period == doctest::Approx(R).epsilon(1e-9));
    }
}

TEST_CASE("greedy undercuts underdamped convergent adoption")
{
    ParallelPathSystem sys{1.0, 1.0, 2.0, 1.0};
    const auto rows = compare_greedy_vs_convergent(sys, 0.5, {0.05, 0.5, 1.0});
    REQUIRE(rows.size() == 3);
    for (const auto& row : rows) CHECK(row.cost_greedy < row.cost_convergent);
    CHECK_THROWS_AS(compare_greedy_vs_convergent(sys, 0.0, {0.5}), DomainError);
}

TEST_CASE("refining the grid leaves costs unchanged")
{
    ParallelPathSystem sys{1.0, 1.0, 2.0, 1.0};
    const auto coarse = integrate(sys, convergent_dynamics(0.5), History::constant(1.0), 100.0, 0.002);
    const auto fine = integrate(sys, convergent_dynamics(0.5), History::constant(1.0), 100.0, 0.001);
    const RelevantSpan span{0.0, 30.0, false, false};
    CostView a(sys, coarse), b(sys, fine);
    for (const auto& s : {greedy_strategy(0.5), convergent_strategy(0.5, 0.5)}) {
        CHECK(std::abs(strategy_cost(s, a, span) - strategy_cost(s, b, span)) < 1e-7);
    }
}
