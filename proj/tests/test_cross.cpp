#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oscstab/cross.hpp"
#include "oscstab/errors.hpp"
#include "oscstab/io.hpp"

using namespace oscstab;

TEST_CASE("expected hash utility")
{
    CHECK(expected_hash_utility(0.0, 1.0, 0.5) == 0.5);
    CHECK(expected_hash_utility(7.0, 0.0, 0.25) == -0.25);
    const double ch = 0x1.0p-20;
    CHECK(expected_hash_utility(10.0, 1024.0 * ch * 2.0, ch) == doctest::Approx(ch));
}

TEST_CASE("difficulty choice")
{
    CHECK(choose_difficulty(10.0, 2.0, 0x1.0p-10) == doctest::Approx(13.0));
    CHECK(choose_difficulty(10.0, 2.0, 8.0) == 0.0);
    const double d = choose_difficulty(5.0, 2.0, 0x1.0p-20);
    CHECK(expected_hash_utility(d, 6.0, 0x1.0p-20) == doctest::Approx(0x1.0p-20));
    CHECK(expected_hash_utility(d, 1.5, 0x1.0p-20) < 0.0);
    CHECK_THROWS_AS(choose_difficulty(2.0, 2.0, 1e-3), DomainError);
}

TEST_CASE("threshold property holds exactly")
{
    for (double L : {3.0, 5.0, 10.0}) {
        for (double ch : {0x1.0p-20, 1e-5, 0.01}) {
            const double T = 2.0;
            const double d = choose_difficulty(L, T, ch);
            for (int i = 1; i <= 100; ++i) {
                const double omega = 2.0 * (L - T) * i / 100.0;
                CHECK((expected_hash_utility(d, omega, ch) > 0.0) == (omega > L - T));
            }
        }
    }
}

TEST_CASE("puzzles")
{
    Puzzle pz{Path::beta, 10.0, 42, 0.0};
    CHECK(solve_puzzle(pz, 1) == std::uint64_t{0});

    pz.difficulty = 8.0;
    const auto s = solve_puzzle(pz, 1u << 16);
    REQUIRE(s);
    CHECK(verify_puzzle(pz, *s));
    CHECK(solve_puzzle(pz, 1u << 16, 4) == s);

    Puzzle other_time = pz;
    other_time.trial_start = 15.0;
    Puzzle other_host = pz;
    other_host.host = 43;
    // the solution is bound to (path, t_i, host); a different tuple rejects it almost surely
    int rejected = 0;
    for (std::uint64_t k = 0; k < 64; ++k) {
        Puzzle a = pz;
        a.host = 1000 + k;
        const auto sk = solve_puzzle(a, 1u << 18);
        REQUIRE(sk);
        Puzzle b = a;
        b.trial_start = 15.0;
        rejected += !verify_puzzle(b, *sk);
    }
    CHECK(rejected >= 60);

    // acceptance rate of random s is 2^-delta
    pz.difficulty = 4.0;
    std::mt19937_64 rng(3);
    const int n = 1000000;
    int hits = 0;
    for (int i = 0; i < n; ++i) hits += verify_puzzle(pz, rng());
    const double p = 1.0 / 16.0;
    CHECK(std::abs(hits / double(n) - p) < 3.0 * std::sqrt(p * (1 - p) / n));
    CHECK_FALSE(solve_puzzle({Path::alpha, 0.0, 1, 60.0}, 100));
}

TEST_CASE("convergence probability")
{
    CHECK(convergence_probability(INFINITY, 0.005) == 1.0);
    CHECK(convergence_probability(0.01, 0.005) == doctest::Approx(0.682689).epsilon(1e-6));
    CHECK(convergence_probability(0.01, 0.05) == doctest::Approx(0.079656).epsilon(1e-5));
    CHECK_THROWS_AS(convergence_probability(0.01, 0.0), DomainError);
}

TEST_CASE("trial simulation")
{
    ParallelPathSystem sys{1.0, 1.0, 2.0, 1.0};
    CrossConfig cfg;
    SUBCASE("no variance converges at once")
    {
        cfg.sigma_split = 0.0;
        const auto run = simulate_cross(sys, cfg, 1);
        CHECK(run.trials_used == 1);
        CHECK(run.trials[0].delta == 0.0);
    }
    SUBCASE("suspension freezes the split")
    {
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            const auto run = simulate_cross(sys, cfg, seed);
            REQUIRE(run.suspension_time);
            const auto& last = run.trials.back();
            CHECK(last.delta < cfg.eps);
            for (std::size_t j = 0; j < run.trajectory.size(); ++j) {
                if (run.trajectory.time(j) >= last.start) CHECK(run.trajectory.load(j) == last.f_alpha);
            }
            for (std::size_t k = 0; k + 1 < run.trials.size(); ++k) CHECK(run.trials[k].delta >= cfg.eps);
        }
    }
    SUBCASE("trial counts are geometric")
    {
        double total = 0.0;
        for (std::uint64_t seed = 0; seed < 1000; ++seed) total += simulate_cross(sys, cfg, seed).trials_used;
        CHECK(total / 1000.0 == doctest::Approx(1.0 / convergence_probability(0.01, 0.005)).epsilon(0.05));
    }
}

TEST_CASE("path failure")
{
    ParallelPathSystem sys{1.0, 1.0, 2.0, 1.0};
    CrossConfig cfg;
    cfg.sigma_split = 0.0;
    cfg.backup_share = 0.1;
    cfg.failures = {{Path::beta, 12.5}};
    const auto run = simulate_cross(sys, cfg, 1);
    REQUIRE(run.failure_events.size() == 1);
    const auto& ev = run.failure_events[0];
    CHECK(ev.immediate_shift == doctest::Approx(0.05));
    CHECK(ev.boundary_time == doctest::Approx(15.0));
    CHECK(run.trajectory.load_at(12.0) == doctest::Approx(0.5));
    CHECK(run.trajectory.load_at(13.0) == doctest::Approx(0.55));
    CHECK(run.trajectory.load_at(16.0) == doctest::Approx(1.0));

    cfg.failures = {{Path::beta, 12.5}, {Path::alpha, 20.0}};
    CHECK_THROWS_AS(simulate_cross(sys, cfg, 1), ConfigError);
}

TEST_CASE("incentive check")
{
    ParallelPathSystem sys{1.0, 1.0, 2.0, 1.0};
    CrossConfig cfg;
    const auto run = simulate_cross(sys, cfg, 5);
    const double gmax = max_cost_gain(cfg.trial_length, sys.delay);
    const auto rep = cross_incentive_check(sys, cfg, run, {0.5 * gmax, gmax, 1.5 * gmax});
    CHECK(rep.equilibrium);
    CHECK(rep.cases == 3 * (1 + 2 * run.trials.size()));

    CrossConfig weak = cfg;
    weak.c_p = 2e-3;
    CHECK_FALSE(cross_incentive_check(sys, weak, run, {1.5 * gmax}).equilibrium);
}

TEST_CASE("configuration")
{
    const auto cfg = read_cross_config(
        KeyValueConfig::parse_string("[cross]\neps = 0.02\nfailures = beta@12.5, beta@40\nbackup_share = 0.1\n"));
    CHECK(cfg.eps == 0.02);
    REQUIRE(cfg.failures.size() == 2);
    CHECK(cfg.failures[1].time == 40.0);
    CHECK_THROWS_AS(read_cross_config(KeyValueConfig::parse_string("[cross]\nfailures = beta\n")), ConfigError);
}
