#include "oscstab/dde.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "oscstab/errors.hpp"

namespace oscstab {

History History::constant(double f0)
{
    if (!(f0 >= 0.0 && f0 <= 1.0)) throw DomainError("history load outside [0, 1]");
    return {[f0](double) { return f0; }};
}

Dynamics greedy_dynamics()
{
    Dynamics d;
    d.name = "greedy";
    d.rhs = [](double, double f, double f_stale, const ParallelPathSystem& sys) {
        const double ca = cost_of(f_stale, sys.steepness);
        const double cb = cost_of(1.0 - f_stale, sys.steepness);
        if (ca > cb) return -sys.rate * f;
        if (ca < cb) return sys.rate * (1.0 - f);
        return 0.0;
    };
    return d;
}

namespace {

double convergent_rhs(double mu, double f, double f_stale, const ParallelPathSystem& sys)
{
    const double dc = cost_of(1.0 - f_stale, sys.steepness) - cost_of(f_stale, sys.steepness);
    return dc <= 0.0 ? sys.rate * mu * dc * f : sys.rate * mu * dc * (1.0 - f);
}

}  // namespace

Dynamics convergent_dynamics(double mu)
{
    if (!(mu >= 0.0 && mu <= 1.0)) throw DomainError("mu must lie in [0, 1]");
    Dynamics d;
    d.name = "convergent";
    d.params["mu"] = mu;
    d.rhs = [mu](double, double f, double f_stale, const ParallelPathSystem& sys) {
        return convergent_rhs(mu, f, f_stale, sys);
    };
    return d;
}

Dynamics mate_dynamics(double gamma)
{
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw DomainError("gamma must be >= 0");
    Dynamics d;
    d.name = "mate";
    d.params["gamma"] = gamma;
    const double mu = gamma / 2.0;
    d.rhs = [mu](double, double f, double f_stale, const ParallelPathSystem& sys) {
        return convergent_rhs(mu, f, f_stale, sys);
    };

    // aggregate of the projected per-host step must reproduce the convergent rhs
    const ParallelPathSystem probe{1.0, 1.0, 1.0, 1.0, {{"mate", 1.0}}};
    for (double fs : {0.0, 0.2, 0.5, 0.7, 1.0}) {
        for (double f : {0.1, 0.5, 0.9}) {
            const double ca = cost_of(fs, 1.0), cb = cost_of(1.0 - fs, 1.0);
            const Allocation unit{0.5, 0.5};
            const double step = mate_step(unit, ca, cb, gamma).alpha - unit.alpha;
            const double movers = cb - ca <= 0.0 ? f : 1.0 - f;
            const double via_step = probe.rate * step * movers;
            const double via_rhs = d.rhs(0.0, f, fs, probe);
            if (std::abs(step) < 0.5 && std::abs(via_step - via_rhs) > 1e-12) {
                throw std::logic_error("MATE aggregate disagrees with the convergent rhs");
            }
        }
    }
    return d;
}

Dynamics dynamics_by_name(std::string_view name, const std::map<std::string, double, std::less<>>& params)
{
    auto need = [&](const char* key) {
        const auto it = params.find(key);
        if (it == params.end()) throw ConfigError(std::string(name) + " dynamics need parameter '" + key + "'");
        return it->second;
    };
    if (name == "greedy") return greedy_dynamics();
    if (name == "convergent") return convergent_dynamics(need("mu"));
    if (name == "mate") return mate_dynamics(need("gamma"));
    throw ConfigError("unknown dynamics '" + std::string(name) + "'");
}

Allocation mate_step(Allocation cur, double c_alpha, double c_beta, double gamma)
{
    const double d = cur.alpha + cur.beta;
    const double a = std::clamp(0.5 * (d - cur.beta + cur.alpha + gamma * (c_beta - c_alpha)), 0.0, d);
    return {a, d - a};
}

namespace {

// Samples f(kh) for k >= -lead, filled as the integration advances.
class DelayBuffer {
public:
    DelayBuffer(const History& history, double h, double delay) : h_(h), history_(history)
    {
        lead_ = static_cast<std::size_t>(std::ceil(delay / h)) + 4;
        values_.reserve(lead_ + 1024);
        for (std::size_t k = 0; k < lead_; ++k) values_.push_back(history(-h * static_cast<double>(lead_ - k)));
    }

    void push(double f) { values_.push_back(f); }
    std::size_t computed() const { return values_.size() - lead_; }  // samples at t >= 0

    double at(double s) const
    {
        if (s <= 0.0) return history_(s);
        const double u = s / h_ + static_cast<double>(lead_);
        const auto last = static_cast<double>(values_.size() - 1);
        auto j = static_cast<std::ptrdiff_t>(std::floor(u)) - 1;
        j = std::min<std::ptrdiff_t>(j, static_cast<std::ptrdiff_t>(last) - 3);
        const double y[4] = {values_[j], values_[j + 1], values_[j + 2], values_[j + 3]};
        return cubic_lagrange(y, u - static_cast<double>(j));
    }

    std::vector<double> take_nonnegative() &&
    {
        return std::vector<double>(values_.begin() + static_cast<std::ptrdiff_t>(lead_), values_.end());
    }

private:
    double h_;
    const History& history_;
    std::size_t lead_;
    std::vector<double> values_;
};

}  // namespace

Trajectory integrate(const ParallelPathSystem& sys, const Dynamics& dyn, const History& history, double horizon,
                     double h, const IntegrateOptions& opt)
{
    sys.validate();
    const double T = sys.delay;
    if (!(T > 0.0)) throw StepTooLarge("method of steps needs T > 0 (the step bound h <= T/100 is empty)");
    if (!(h > 0.0) || h > T / 100.0 * (1.0 + 1e-12)) throw StepTooLarge("step h must satisfy 0 < h <= T/100");
    if (!(horizon >= 2.0 * T)) throw DomainError("horizon must be at least 2T");
    if (!dyn.rhs) throw DomainError("dynamics without rhs");

    const auto n = static_cast<std::size_t>(std::llround(horizon / h));
    DelayBuffer buf(history, h, T);
    std::vector<double> turning;
    double f = history(0.0);
    buf.push(f);

    auto rhs = [&](double t, double x) { return dyn.rhs(t, x, std::clamp(buf.at(t - T), 0.0, 1.0), sys); };
    auto rk4 = [&](double t, double x, double dt) {
        const double k1 = rhs(t, x);
        const double k2 = rhs(t + dt / 2, x + dt / 2 * k1);
        const double k3 = rhs(t + dt / 2, x + dt / 2 * k2);
        const double k4 = rhs(t + dt, x + dt * k3);
        return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    };
    auto side = [&](double t) { return buf.at(t - T) - 0.5; };

    for (std::size_t i = 0; i < n; ++i) {
        const double t0 = h * static_cast<double>(i);
        const double t1 = h * static_cast<double>(i + 1);
        const double s0 = side(t0), s1 = side(t1);
        if (s0 * s1 < 0.0) {
            double lo = t0, hi = t1;
            while (hi - lo > 1e-10) {
                const double mid = 0.5 * (lo + hi);
                (side(mid) * s0 > 0.0 ? lo : hi) = mid;
            }
            turning.push_back(0.5 * (lo + hi));
            if (lo > t0) f = rk4(t0, f, lo - t0);
            f += (hi - lo) * rhs(lo, f);
            if (t1 > hi) f = rk4(hi, f, t1 - hi);
        } else {
            f = rk4(t0, f, h);
        }
        if (!std::isfinite(f) || f < opt.escape_low || f > opt.escape_high) {
            throw NonFinite("integration left the admissible load range at t = " + std::to_string(t1));
        }
        // snap round-off; larger excursions are kept so a runaway rhs reaches the escape bounds
        if (f < 0.0 && f > -kLoadSnap) f = 0.0;
        if (f > 1.0 && f < 1.0 + kLoadSnap) f = 1.0;
        buf.push(f);
    }
    Trajectory traj(0.0, h, std::move(buf).take_nonnegative());
    traj.set_turning_points(std::move(turning));
    return traj;
}

Trajectory integrate(const ParallelPathSystem& sys, const Dynamics& dyn, double horizon)
{
    return integrate(sys, dyn, History::constant(sys.initial_load), horizon, sys.delay / 1000.0);
}

std::string_view to_string(Damping d)
{
    switch (d) {
    case Damping::undamped: return "undamped";
    case Damping::underdamped: return "underdamped";
    case Damping::overdamped: return "overdamped";
    }
    return "?";
}

DampingVerdict classify_damping(const Trajectory& traj)
{
    const std::size_t n = traj.size();
    if (n < 8) throw Inconclusive("trajectory too short for a damping verdict");

    std::size_t crossings = 0;
    std::vector<double> peaks;
    double peak = 0.0;
    bool open = false;
    for (std::size_t i = 1; i < n; ++i) {
        if ((traj.load(i - 1) - 0.5) * (traj.load(i) - 0.5) < 0.0) {
            ++crossings;
            if (open && peak >= 1e-9) peaks.push_back(peak);
            peak = 0.0;
            open = true;
        }
        if (open) peak = std::max(peak, traj.imbalance(i));
    }

    if (crossings == 0) {
        const std::size_t first = (3 * n) / 4;
        for (std::size_t i = first + 1; i < n; ++i) {
            if (traj.imbalance(i) > traj.imbalance(i - 1) + 1e-12) {
                throw Inconclusive("no equal-load crossing but the tail is not settling");
            }
        }
        return {Damping::overdamped, 0.0, 0};
    }
    if (peaks.size() < 3) throw Inconclusive("fewer than three overshoot peaks; extend the horizon");
    const double ratio = peaks.back() / peaks[peaks.size() - 2];
    if (ratio > 1.01) throw Inconclusive("oscillation envelope still growing; extend the horizon");
    return {ratio >= 0.99 ? Damping::undamped : Damping::underdamped, ratio, crossings};
}

}  // namespace oscstab
