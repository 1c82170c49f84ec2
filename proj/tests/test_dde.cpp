#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oscstab/dde.hpp"
#include "oscstab/errors.hpp"

using namespace oscstab;

namespace {

double sup_error(const Trajectory& traj, const ParallelPathSystem& sys)
{
    double e = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        e = std::max(e, std::abs(traj.load(i) - greedy_closed_form(sys, traj.time(i))));
    }
    return e;
}

}  // namespace

TEST_CASE("greedy integration tracks the closed form")
{
    for (double r : {0.3, 1.0}) {
        for (double T : {1.0, 2.0}) {
            ParallelPathSystem sys{r, 1.0, T, 1.0};
            const auto traj = integrate(sys, greedy_dynamics(), 12.0 * T);
            CAPTURE(r);
            CAPTURE(T);
            CHECK(sup_error(traj, sys) < 1e-8);
            const auto& tp = traj.turning_points();
            REQUIRE(tp.size() >= 3);
            const double W = oscillation_params(r, T).half_period;
            for (std::size_t i = 2; i < tp.size(); ++i) CHECK(tp[i] - tp[i - 1] == doctest::Approx(W).epsilon(1e-9));
        }
    }
}

TEST_CASE("step and horizon preconditions")
{
    ParallelPathSystem sys{1.0, 1.0, 2.0, 1.0};
    CHECK_THROWS_AS(integrate(sys, greedy_dynamics(), History::constant(1.0), 10.0, 0.1), StepTooLarge);
    CHECK_THROWS_AS(integrate(sys, greedy_dynamics(), History::constant(1.0), 3.0, 0.001), DomainError);
    sys.delay = 0.0;
    CHECK_THROWS_AS(integrate(sys, greedy_dynamics(), 10.0), StepTooLarge);
}

TEST_CASE("escaping trajectories are reported")
{
    ParallelPathSystem sys{1.0, 1.0, 1.0, 1.0};
    Dynamics runaway{"runaway", {}, [](double, double, double, const ParallelPathSystem&) { return 1.0; }};
    CHECK_THROWS_AS(integrate(sys, runaway, 10.0), NonFinite);
}

TEST_CASE("damping regimes of convergent adoption")
{
    ParallelPathSystem sys{1.0, 1.0, 2.0, 1.0};
    CHECK(classify_damping(integrate(sys, convergent_dynamics(1.0), 200.0)).kind == Damping::undamped);
    CHECK(classify_damping(integrate(sys, convergent_dynamics(0.5), 200.0)).kind == Damping::underdamped);
    CHECK(classify_damping(integrate(sys, convergent_dynamics(0.1), 200.0)).kind == Damping::overdamped);
}

TEST_CASE("MATE step equals convergent rerouting with mu = gamma / 2")
{
    const auto a = mate_step({0.7, 0.3}, 0.7, 0.3, 0.5);
    CHECK(a.alpha == doctest::Approx(0.7 - 0.25 * 0.4));
    CHECK(a.alpha + a.beta == doctest::Approx(1.0));
    const auto clipped = mate_step({0.9, 0.1}, 1.0, 0.0, 10.0);
    CHECK(clipped.alpha == 0.0);
    CHECK(clipped.beta == doctest::Approx(1.0));

    ParallelPathSystem sys{1.0, 1.0, 2.0, 1.0};
    for (double mu : {0.1, 0.5}) {
        const auto x = integrate(sys, mate_dynamics(2.0 * mu), 60.0);
        const auto y = integrate(sys, convergent_dynamics(mu), 60.0);
        REQUIRE(x.size() == y.size());
        double d = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) d = std::max(d, std::abs(x.load(i) - y.load(i)));
        CHECK(d <= 1e-12);
    }
}

TEST_CASE("dynamics lookup")
{
    CHECK(dynamics_by_name("greedy", {}).name == "greedy");
    CHECK(dynamics_by_name("convergent", {{"mu", 0.5}}).params.at("mu") == 0.5);
    CHECK_THROWS_AS(dynamics_by_name("convergent", {}), ConfigError);
    CHECK_THROWS_AS(dynamics_by_name("nope", {}), ConfigError);
}

TEST_CASE("negligible staleness reaches equal load")
{
    ParallelPathSystem sys{1.0, 1.0, 0.02, 1.0};
    const auto traj = integrate(sys, convergent_dynamics(1.0), 20.0);
    CHECK(std::abs(traj.load(traj.size() - 1) - 0.5) < 1e-3);
}
