#include "oscstab/floss.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

#include "oscstab/agent_sim.hpp"
#include "oscstab/errors.hpp"
#include "oscstab/io.hpp"

namespace oscstab {

void FlossConfig::validate(const ParallelPathSystem& sys) const
{
    if (!(interval_length > sys.delay)) throw ConfigError("FLOSS needs interval length L > T");
    if (!(c_a > 0.0)) throw ConfigError("c_a must be positive");
    if (!(c_p > c_a)) throw ConfigError("c_p must exceed c_a");
    if (!(kappa > 0.0 && kappa <= 1.0)) throw ConfigError("kappa must lie in (0, 1]");
    if (!(delta_stop > 0.0)) throw ConfigError("delta_stop must be positive");
    if (!(step > 0.0) || !(horizon > 0.0)) throw ConfigError("step and horizon must be positive");
    if (mode == Mode::stochastic && flows < 1) throw ConfigError("stochastic FLOSS needs flows >= 1");
}

FlossConfig read_floss_config(const KeyValueConfig& cfg)
{
    cfg.require_known("floss", {"L", "c_a", "c_p", "kappa", "delta_stop", "mode", "initial", "flows", "step", "horizon"});
    FlossConfig f;
    f.interval_length = cfg.number("floss", "L", f.interval_length);
    f.c_a = cfg.number("floss", "c_a", f.c_a);
    f.c_p = cfg.number("floss", "c_p", f.c_p);
    f.kappa = cfg.number("floss", "kappa", f.kappa);
    f.delta_stop = cfg.number("floss", "delta_stop", f.delta_stop);
    f.step = cfg.number("floss", "step", f.step);
    f.horizon = cfg.number("floss", "horizon", f.horizon);
    f.flows = static_cast<std::size_t>(cfg.number("floss", "flows", static_cast<double>(f.flows)));
    if (const auto m = cfg.get("floss", "mode")) {
        if (*m == "fluid") f.mode = FlossConfig::Mode::fluid;
        else if (*m == "stochastic") f.mode = FlossConfig::Mode::stochastic;
        else throw ConfigError("[floss] mode must be fluid or stochastic");
    }
    if (const auto m = cfg.get("floss", "initial")) {
        if (*m == "injected") f.initial = FlossConfig::InitialSplit::injected;
        else if (*m == "fair") f.initial = FlossConfig::InitialSplit::fair;
        else throw ConfigError("[floss] initial must be injected or fair");
    }
    return f;
}

double max_allowance(double f_cheap, double f_exp)
{
    if (!(f_cheap >= 0.0 && f_exp <= 1.0 && f_cheap <= f_exp + 1e-15)) {
        throw DomainError("max_allowance needs 0 <= f_cheap <= f_expensive <= 1");
    }
    if (f_exp == 0.0) return 0.0;
    return std::max(0.0, (f_exp - f_cheap) / (2.0 * f_exp));
}

FlossRun simulate_floss(const ParallelPathSystem& sys, const FlossConfig& cfg, std::uint64_t seed)
{
    sys.validate();
    cfg.validate(sys);
    const double L = cfg.interval_length;
    const bool stochastic = cfg.mode == FlossConfig::Mode::stochastic;

    // stochastic mode tracks the registered path of every flow
    std::vector<std::uint8_t> on_alpha;
    std::vector<std::uint64_t> ids;
    double f;
    if (stochastic) {
        std::mt19937_64 rng(seed);
        const double share = cfg.initial == FlossConfig::InitialSplit::injected ? sys.initial_load : 0.5;
        std::bernoulli_distribution pick(share);
        on_alpha.resize(cfg.flows);
        ids.resize(cfg.flows);
        std::size_t count = 0;
        for (std::size_t k = 0; k < cfg.flows; ++k) {
            ids[k] = flow_id(seed, k);
            on_alpha[k] = pick(rng) ? 1 : 0;
            count += on_alpha[k];
        }
        f = static_cast<double>(count) / static_cast<double>(cfg.flows);
    } else {
        f = cfg.initial == FlossConfig::InitialSplit::injected ? sys.initial_load : 0.5;
    }

    FlossRun run;
    run.intervals.push_back({0, 0.0, f, std::abs(2.0 * f - 1.0), 0.0, f <= 0.5 ? Path::alpha : Path::beta, 0.0});
    for (std::size_t i = 1;; ++i) {
        const auto& prev = run.intervals.back();
        if (prev.delta < cfg.delta_stop) {
            // loads held since the interval start; stale costs agree after T
            run.suspension_time = prev.start + sys.delay;
            break;
        }
        const double t_i = L * static_cast<double>(i);
        if (t_i > cfg.horizon) break;
        const Path cheap = prev.f_alpha <= 0.5 ? Path::alpha : Path::beta;
        const double f_cheap = cheap == Path::alpha ? prev.f_alpha : 1.0 - prev.f_alpha;
        const double f_exp = 1.0 - f_cheap;
        const double rho = cfg.kappa * max_allowance(f_cheap, f_exp);
        double moved;
        if (stochastic) {
            const std::uint8_t exp_flag = cheap == Path::alpha ? 0 : 1;
            std::size_t n_moved = 0;
            for (std::size_t k = 0; k < on_alpha.size(); ++k) {
                if (on_alpha[k] == exp_flag && selective_admission(ids[k], t_i, rho)) {
                    on_alpha[k] = 1 - exp_flag;
                    ++n_moved;
                }
            }
            moved = static_cast<double>(n_moved) / static_cast<double>(on_alpha.size());
        } else {
            moved = rho * f_exp;
        }
        const double f_next = std::clamp(prev.f_alpha + (cheap == Path::alpha ? moved : -moved), 0.0, 1.0);
        ++run.migrations;
        run.intervals.push_back({i, t_i, f_next, std::abs(2.0 * f_next - 1.0), rho,
                                 f_next <= 0.5 ? Path::alpha : Path::beta, moved});
    }
    run.intervals_used = run.intervals.size();

    const auto n = static_cast<std::size_t>(std::llround(cfg.horizon / cfg.step));
    std::vector<double> loads(n + 1);
    std::size_t k = 0;
    for (std::size_t j = 0; j <= n; ++j) {
        const double t = cfg.step * static_cast<double>(j);
        while (k + 1 < run.intervals.size() && run.intervals[k + 1].start <= t + 1e-12) ++k;
        loads[j] = run.intervals[k].f_alpha;
    }
    run.trajectory = Trajectory(0.0, cfg.step, std::move(loads), Trajectory::Interpolation::hold);
    return run;
}

void FlossRun::write_csv(std::ostream& out, double steepness) const
{
    CsvWriter csv(out, {"t", "f_alpha", "f_beta", "c_alpha", "c_beta", "interval_index", "rho_applied",
                        "registered_alpha"});
    std::size_t k = 0;
    for (std::size_t j = 0; j < trajectory.size(); ++j) {
        const double t = trajectory.time(j);
        while (k + 1 < intervals.size() && intervals[k + 1].start <= t + 1e-12) ++k;
        const double fa = trajectory.load(j);
        csv.row({t, fa, 1.0 - fa, cost_of(fa, steepness), cost_of(1.0 - fa, steepness),
                 static_cast<double>(intervals[k].index), intervals[k].rho_applied, intervals[k].f_alpha});
    }
}

Strategy floss_strategy(Entitlement entitled, double t0, double period)
{
    Strategy s;
    s.id = "floss";
    s.period = period;
    s.select = [entitled = std::move(entitled), t0](Path to, Path from, double t, const CostView& v) {
        if (t == t0) return 0.5;
        const Path alt = other(from);
        const bool go = entitled(alt, t) && v.stale_cost(alt, t) < v.stale_cost(from, t);
        return to == from ? (go ? 0.0 : 1.0) : (go ? 1.0 : 0.0);
    };
    return s;
}

IncentiveReport floss_incentive_check(const ParallelPathSystem& sys, const FlossConfig& cfg, const FlossRun& run)
{
    IncentiveReport rep;
    const double p = sys.steepness;
    auto fail = [&](const std::string& what) {
        if (rep.equilibrium) rep.violation = what;
        rep.equilibrium = false;
    };
    char buf[160];
    for (const auto& iv : run.intervals) {
        // costs during the interval are the registration-time costs (load is held)
        const double c[2] = {cost_of(iv.f_alpha, p), cost_of(1.0 - iv.f_alpha, p)};
        if (iv.index == 0) {
            // initial call: both paths cost 1/2^p + c_a in expectation, so any split is optimal
            ++rep.cases;
            continue;
        }
        const auto& before = run.intervals[iv.index - 1];
        const Path cheap = before.cheaper;
        const Path exp = other(cheap);
        auto cost = [&](Path pth, bool entitled) { return c[index(pth)] + mechanism_cost(entitled, cfg.c_a, cfg.c_p); };

        // case 1: on the cheaper path; u_F stays
        for (bool ent : {false, true}) {
            ++rep.cases;
            if (!(cost(cheap, true) <= cost(exp, ent))) {
                std::snprintf(buf, sizeof buf, "interval %zu: cheaper-path occupant gains by switching (entitled=%d)",
                              iv.index, ent ? 1 : 0);
                fail(buf);
            }
        }
        // case 2: on the expensive path; u_F switches iff entitled
        ++rep.cases;
        if (!(cost(cheap, true) <= cost(exp, true))) {
            std::snprintf(buf, sizeof buf, "interval %zu: entitled expensive-path occupant loses by switching", iv.index);
            fail(buf);
        }
        ++rep.cases;
        if (!(cost(exp, true) < cost(cheap, false))) {
            std::snprintf(buf, sizeof buf, "interval %zu: unentitled expensive-path occupant gains by switching",
                          iv.index);
            fail(buf);
        }
    }
    return rep;
}

double unequal_load_equilibrium(double n_hi, double n_lo, double p, double c_a)
{
    if (!(n_hi >= 0.0 && n_lo >= 0.0 && p >= 1.0 && c_a >= 0.0)) throw DomainError("invalid multiplicity inputs");
    auto g = [&](double x) { return std::pow(x, p) + n_hi * c_a - std::pow(1.0 - x, p) - n_lo * c_a; };
    double lo = 0.0, hi = 1.0;
    const double glo = g(lo), ghi = g(hi);
    if (glo == 0.0) return lo;
    if (ghi == 0.0) return hi;
    if (glo * ghi > 0.0) throw NoRoot("registration costs push the balance point outside [0, 1]");
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        ((g(mid) < 0.0) == (glo < 0.0) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace oscstab
