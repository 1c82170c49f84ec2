#include "oscstab/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "oscstab/errors.hpp"
#include "oscstab/io.hpp"

namespace oscstab {

std::string_view to_string(Path p) { return p == Path::alpha ? "alpha" : "beta"; }

Path path_from_string(std::string_view name)
{
    if (name == "alpha") return Path::alpha;
    if (name == "beta") return Path::beta;
    throw ConfigError("unknown path '" + std::string(name) + "' (expected alpha or beta)");
}

std::string_view to_string(Regime r)
{
    switch (r) {
    case Regime::oscillating: return "oscillating";
    case Regime::stable: return "stable";
    case Regime::stable_equal_load: return "stable_equal_load";
    }
    return "?";
}

double ParallelPathSystem::share(std::string_view strategy) const
{
    const auto it = profile.find(strategy);
    return it == profile.end() ? 0.0 : it->second;
}

void ParallelPathSystem::validate() const
{
    if (!(rate > 0.0) || !std::isfinite(rate)) throw ConfigError("r must be positive");
    if (!(steepness >= 1.0) || !std::isfinite(steepness)) throw ConfigError("p must be >= 1");
    if (!(delay >= 0.0) || !std::isfinite(delay)) throw ConfigError("T must be >= 0");
    if (!(initial_load >= 0.5 && initial_load <= 1.0)) throw ConfigError("A0 must lie in [1/2, 1]");
    if (profile.empty()) throw ConfigError("strategy profile is empty");
    double total = 0.0;
    for (const auto& [name, s] : profile) {
        if (!(s >= 0.0 && s <= 1.0)) throw ConfigError("adoption share of '" + name + "' outside [0, 1]");
        total += s;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError("adoption shares must sum to 1");
}

ParallelPathSystem read_system(const KeyValueConfig& cfg)
{
    ParallelPathSystem sys;
    sys.rate = cfg.number("", "r", sys.rate);
    sys.steepness = cfg.number("", "p", sys.steepness);
    sys.delay = cfg.number("", "T", sys.delay);
    if (const auto a0 = cfg.get("", "A0")) {
        // `A0 = A` starts the universal-greedy system inside its periodic regime.
        if (*a0 == "A") {
            sys.initial_load = sys.delay > 0.0 ? oscillation_params(sys.rate, sys.delay).amplitude : 0.5;
        } else {
            sys.initial_load = parse_number(*a0, cfg.origin() + ": A0");
        }
    }
    if (cfg.has_section("profile")) {
        sys.profile.clear();
        for (const auto& e : cfg.entries("profile")) {
            sys.profile[e.key] = parse_number(e.value, cfg.origin() + ": [profile] " + e.key);
        }
    }
    sys.validate();
    return sys;
}

void write_system(const ParallelPathSystem& sys, std::ostream& out)
{
    KeyValueConfig cfg;
    auto num = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    cfg.set("", "r", num(sys.rate));
    cfg.set("", "p", num(sys.steepness));
    cfg.set("", "T", num(sys.delay));
    cfg.set("", "A0", num(sys.initial_load));
    for (const auto& [name, s] : sys.profile) cfg.set("profile", name, num(s));
    cfg.write(out);
}

double cost_of(double load, double steepness)
{
    if (!(load >= -1e-9 && load <= 1.0 + 1e-9)) throw DomainError("path load outside [0, 1]");
    if (!(steepness >= 1.0)) throw DomainError("cost steepness must be >= 1");
    return std::pow(std::clamp(load, 0.0, 1.0), steepness);
}

PathCost path_cost(double load, double steepness) { return {cost_of(load, steepness), false}; }

OscillationParams oscillation_params(double rate, double delay)
{
    if (!(rate > 0.0)) throw DomainError("oscillation requires r > 0");
    if (!(delay > 0.0)) throw DomainError("oscillation requires T > 0");
    const double e = std::exp(rate * delay);
    return {1.0 - 1.0 / (2.0 * e), std::log(2.0 * e - 1.0) / rate};
}

double mixed_amplitude(double q, double rate, double delay)
{
    return (0.5 - q) * std::exp(-rate * delay) + q;
}

namespace {

double snap(double f)
{
    if (f < 0.0 && f > -kLoadSnap) return 0.0;
    if (f > 1.0 && f < 1.0 + kLoadSnap) return 1.0;
    return std::clamp(f, 0.0, 1.0);
}

void check_share(double q)
{
    if (!(q >= 0.0 && q <= 1.0)) throw DomainError("greedy share must lie in [0, 1]");
}

// First turning point of the greedy/antagonist mix for q > 1/2, T > 0, A0 > 1/2:
// the load crosses 1/2 on its initial decay, and the crossing becomes visible T later.
double first_turning_point(double q, const ParallelPathSystem& sys)
{
    const double amp = sys.initial_load + q - 1.0;
    return sys.delay + std::log(amp / (q - 0.5)) / sys.rate;
}

}  // namespace

double mixed_profile_closed_form(double q, const ParallelPathSystem& sys, double t)
{
    check_share(q);
    const double r = sys.rate;
    const double a0 = sys.initial_load;
    if (t < 0.0) return a0;
    const double initial = (a0 + q - 1.0) * std::exp(-r * t) + (1.0 - q);
    if (sys.delay == 0.0) {
        // Fresh information: the greedy players stop the decay at equal load.
        return snap(std::max(initial, 0.5));
    }
    if (a0 == 0.5) return 0.5;
    if (q <= 0.5) return snap(initial);

    const double t1 = first_turning_point(q, sys);
    if (t < t1) return snap(initial);
    const double w = oscillation_params(r, sys.delay).half_period;
    const double a = mixed_amplitude(q, r, sys.delay) + q - 1.0;
    const double k = std::floor((t - t1) / w);
    const double local = t - t1 - k * w;
    const bool rising = std::fmod(k, 2.0) == 0.0;
    return snap(rising ? q - a * std::exp(-r * local) : 1.0 - q + a * std::exp(-r * local));
}

std::vector<double> mixed_turning_points(double q, const ParallelPathSystem& sys, double horizon)
{
    check_share(q);
    std::vector<double> out;
    if (sys.delay == 0.0 || q <= 0.5 || sys.initial_load == 0.5) return out;
    const double t1 = first_turning_point(q, sys);
    const double w = oscillation_params(sys.rate, sys.delay).half_period;
    // For A0 = A the first turning point lands on W; t = 0 counts as one too.
    if (std::abs(t1 - w) < 1e-12 * std::max(1.0, w)) out.push_back(0.0);
    for (double k = 0.0;; k += 1.0) {
        const double tp = t1 + k * w;
        if (tp > horizon) break;
        out.push_back(tp);
    }
    return out;
}

double greedy_closed_form(const ParallelPathSystem& sys, double t)
{
    for (const auto& [name, s] : sys.profile) {
        if (name != "greedy" && s != 0.0) throw DomainError("greedy_closed_form requires universal greedy adoption");
    }
    return mixed_profile_closed_form(1.0, sys, t);
}

namespace {

Trajectory sample(double q, const ParallelPathSystem& sys, double horizon, double step)
{
    if (!(step > 0.0) || !(horizon > 0.0)) throw DomainError("sampling needs positive horizon and step");
    const auto n = static_cast<std::size_t>(std::llround(horizon / step));
    std::vector<double> f(n + 1);
    for (std::size_t i = 0; i <= n; ++i) f[i] = mixed_profile_closed_form(q, sys, step * static_cast<double>(i));
    Trajectory traj(0.0, step, std::move(f));
    traj.set_turning_points(mixed_turning_points(q, sys, traj.end()));
    return traj;
}

}  // namespace

Trajectory sample_greedy(const ParallelPathSystem& sys, double horizon, double step)
{
    greedy_closed_form(sys, 0.0);  // profile check
    return sample(1.0, sys, horizon, step);
}

Trajectory sample_mixed(double q, const ParallelPathSystem& sys, double horizon, double step)
{
    return sample(q, sys, horizon, step);
}

Classification limit_imbalance(double q)
{
    check_share(q);
    if (q < 0.5) return {Regime::stable, 1.0 - 2.0 * q};
    if (q == 0.5) return {Regime::stable_equal_load, 0.0};
    return {Regime::oscillating, 0.0};
}

}  // namespace oscstab
