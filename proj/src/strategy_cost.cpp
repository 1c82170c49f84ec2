#include "oscstab/strategy_cost.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "oscstab/dde.hpp"
#include "oscstab/errors.hpp"

namespace oscstab {

namespace {

constexpr double kKinkTol = 1e-9;  // grid units

// int_{xa}^{xb} of the cubic through (0,y0)..(3,y3)
double cubic_integral(const double (&y)[4], double xa, double xb)
{
    const double c0 = y[0];
    const double c1 = (-11.0 * y[0] + 18.0 * y[1] - 9.0 * y[2] + 2.0 * y[3]) / 6.0;
    const double c2 = (2.0 * y[0] - 5.0 * y[1] + 4.0 * y[2] - y[3]) / 2.0;
    const double c3 = (-y[0] + 3.0 * y[1] - 3.0 * y[2] + y[3]) / 6.0;
    auto prim = [&](double x) { return x * (c0 + x * (c1 / 2.0 + x * (c2 / 3.0 + x * c3 / 4.0))); };
    return prim(xb) - prim(xa);
}

}  // namespace

PathCostIntegral::PathCostIntegral(const Trajectory& traj, double steepness) : traj_(&traj)
{
    const std::size_t n = traj.size();
    if (n < 2) throw DomainError("cost integral needs at least two samples");
    for (Path p : kPaths) {
        auto& c = cost_[index(p)];
        c.resize(n);
        for (std::size_t i = 0; i < n; ++i) c[i] = cost_of(traj.load(p, i), steepness);
    }
    if (traj.interpolation() == Trajectory::Interpolation::cubic) {
        for (double tp : traj.turning_points()) kinks_.push_back((tp - traj.start()) / traj.step());
    }
    for (Path p : kPaths) {
        auto& cum = cum_[index(p)];
        cum.assign(n, 0.0);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            cum[i + 1] = cum[i] + cell(p, i, static_cast<double>(i), static_cast<double>(i + 1));
        }
    }
}

bool PathCostIntegral::kink_inside(double a, double b) const
{
    const auto it = std::upper_bound(kinks_.begin(), kinks_.end(), a + kKinkTol);
    return it != kinks_.end() && *it < b - kKinkTol;
}

std::size_t PathCostIntegral::stencil(std::size_t i) const
{
    const std::size_t last = cost_[0].size() - 4;
    auto fit = [&](std::ptrdiff_t j) {
        return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j, 0, static_cast<std::ptrdiff_t>(last)));
    };
    const auto si = static_cast<std::ptrdiff_t>(i);
    for (std::ptrdiff_t j : {si - 1, si, si - 2}) {
        const std::size_t k = fit(j);
        if (k > i || k + 3 < i + 1) continue;
        if (!kink_inside(static_cast<double>(k), static_cast<double>(k + 3))) return k;
    }
    return fit(si - 1);
}

double PathCostIntegral::piece(Path p, std::size_t j, double xa, double xb) const
{
    const auto& c = cost_[index(p)];
    const double y[4] = {c[j], c[j + 1], c[j + 2], c[j + 3]};
    const double off = static_cast<double>(j);
    return cubic_integral(y, xa - off, xb - off) * traj_->step();
}

double PathCostIntegral::cell(Path p, std::size_t i, double xa, double xb) const
{
    const auto& c = cost_[index(p)];
    const std::size_t n = c.size();
    if (traj_->interpolation() == Trajectory::Interpolation::hold) return c[i] * (xb - xa) * traj_->step();
    if (n < 4) {
        const double slope = c[i + 1] - c[i];
        const double ua = xa - static_cast<double>(i), ub = xb - static_cast<double>(i);
        return (c[i] * (ub - ua) + slope * (ub * ub - ua * ua) / 2.0) * traj_->step();
    }
    const double lo = static_cast<double>(i), hi = lo + 1.0;
    const auto it = std::upper_bound(kinks_.begin(), kinks_.end(), lo + kKinkTol);
    if (it != kinks_.end() && *it < hi - kKinkTol) {
        // kink inside the cell: extrapolate each side from its own samples
        const double k = *it;
        const std::size_t left = i >= 3 ? i - 3 : 0;
        const std::size_t right = std::min(i + 1, n - 4);
        double sum = 0.0;
        if (xa < k) sum += piece(p, left, xa, std::min(xb, k));
        if (xb > k) sum += piece(p, right, std::max(xa, k), xb);
        return sum;
    }
    return piece(p, stencil(i), xa, xb);
}

double PathCostIntegral::cumulative(Path p, double t) const
{
    if (!traj_->covers(t)) throw OutOfRange("usage window leaves the trajectory span");
    const std::size_t n = cost_[0].size();
    const double x = std::clamp((t - traj_->start()) / traj_->step(), 0.0, static_cast<double>(n - 1));
    auto i = static_cast<std::size_t>(x);
    if (i >= n - 1) return cum_[index(p)][n - 1];
    const double base = cum_[index(p)][i];
    if (x == static_cast<double>(i)) return base;
    return base + cell(p, i, static_cast<double>(i), x);
}

double PathCostIntegral::integral(Path p, double a, double b) const { return cumulative(p, b) - cumulative(p, a); }

CostView::CostView(const ParallelPathSystem& sys, const Trajectory& traj)
    : sys_(&sys), traj_(&traj), integral_(traj, sys.steepness)
{
}

double CostView::stale_load(Path p, double t) const
{
    const double s = t - sys_->delay;
    const double fa = s < traj_->start() ? sys_->initial_load : traj_->load_at(s);
    return p == Path::alpha ? fa : 1.0 - fa;
}

std::optional<Path> CostView::perceived_cheaper(double t) const
{
    const double ca = stale_cost(Path::alpha, t), cb = stale_cost(Path::beta, t);
    if (ca < cb) return Path::alpha;
    if (cb < ca) return Path::beta;
    return std::nullopt;
}

double CostView::usage_cost(Path p, double t, double period) const
{
    if (!(period > 0.0)) throw DomainError("re-evaluation period must be positive");
    if (!traj_->covers(t) || !traj_->covers(t + period)) {
        throw OutOfRange("usage window [t, t+R] leaves the trajectory span");
    }
    return integral_.integral(p, t, t + period) / period;
}

double usage_cost(const ParallelPathSystem& sys, const Trajectory& traj, Path p, double t, double period)
{
    return CostView(sys, traj).usage_cost(p, t, period);
}

namespace {

double tie_stays(Path to, Path from) { return to == from ? 1.0 : 0.0; }

}  // namespace

Strategy greedy_strategy(double period)
{
    Strategy s;
    s.id = "greedy";
    s.period = period;
    s.select = [](Path to, Path from, double t, const CostView& v) {
        const auto cheap = v.perceived_cheaper(t);
        return cheap ? (*cheap == to ? 1.0 : 0.0) : tie_stays(to, from);
    };
    s.occupancy = [](Path p, double t, const CostView& v) {
        const auto cheap = v.perceived_cheaper(t);
        return cheap ? (*cheap == p ? 1.0 : 0.0) : 0.5;
    };
    return s;
}

Strategy antagonist_strategy(double period)
{
    Strategy s;
    s.id = "antagonist";
    s.period = period;
    s.select = [](Path to, Path from, double t, const CostView& v) {
        const auto cheap = v.perceived_cheaper(t);
        return cheap ? (*cheap == to ? 0.0 : 1.0) : tie_stays(to, from);
    };
    return s;
}

Strategy convergent_strategy(double mu, double period)
{
    if (!(mu >= 0.0 && mu <= 1.0)) throw DomainError("mu must lie in [0, 1]");
    Strategy s;
    s.id = "convergent";
    s.period = period;
    s.select = [mu](Path to, Path from, double t, const CostView& v) {
        const double gap = v.stale_cost(from, t) - v.stale_cost(other(from), t);
        const double sw = std::clamp(mu * gap, 0.0, 1.0);
        return to == from ? 1.0 - sw : sw;
    };
    s.occupancy = [](Path p, double t, const CostView& v) { return v.load(p, t); };
    return s;
}

Strategy mixed_strategy(double q, double period)
{
    if (!(q >= 0.0 && q <= 1.0)) throw DomainError("mixing probability must lie in [0, 1]");
    Strategy s;
    s.id = "mixed";
    s.period = period;
    s.select = [q](Path to, Path from, double t, const CostView& v) {
        const auto cheap = v.perceived_cheaper(t);
        return cheap ? (*cheap == to ? q : 1.0 - q) : tie_stays(to, from);
    };
    return s;
}

Strategy stay_strategy(double period)
{
    Strategy s;
    s.id = "stay";
    s.period = period;
    s.select = [](Path to, Path from, double, const CostView&) { return tie_stays(to, from); };
    return s;
}

namespace {

// y(alpha) on the trajectory grid from dy/dt = r [u(a|b) y_b - u(b|a) y_a], r = 1/R.
Strategy with_master_equation(const Strategy& s, const CostView& view)
{
    if (s.occupancy) return s;
    const auto& traj = view.trajectory();
    const double h = traj.step();
    const double rate = 1.0 / s.period;
    auto flow = [&](double t, double ya) {
        const double in = s.select(Path::alpha, Path::beta, t, view) * (1.0 - ya);
        const double out = s.select(Path::beta, Path::alpha, t, view) * ya;
        return rate * (in - out);
    };
    auto table = std::make_shared<std::vector<double>>(traj.size());
    double y = view.system().initial_load;
    (*table)[0] = y;
    for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
        const double t = traj.time(i);
        const double k1 = flow(t, y);
        const double k2 = flow(t + h / 2, y + h / 2 * k1);
        const double k3 = flow(t + h / 2, y + h / 2 * k2);
        const double k4 = flow(t + h, y + h * k3);
        y = std::clamp(y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), 0.0, 1.0);
        (*table)[i + 1] = y;
    }
    Strategy out = s;
    const double start = traj.start();
    out.occupancy = [table, start, h](Path p, double t, const CostView&) {
        const double x = std::clamp((t - start) / h, 0.0, static_cast<double>(table->size() - 1));
        const auto i = std::min(static_cast<std::size_t>(x), table->size() - 1);
        const double frac = x - static_cast<double>(i);
        double ya = (*table)[i];
        if (frac > 0.0 && i + 1 < table->size()) ya += frac * ((*table)[i + 1] - ya);
        return p == Path::alpha ? ya : 1.0 - ya;
    };
    return out;
}

// usage evaluated at t, perception (u, y, overlay) at t_perceive
double cost_at(const Strategy& s, const CostView& view, double t, double t_perceive, const CostOverlay& overlay)
{
    double usage[2];
    for (Path p : kPaths) usage[index(p)] = view.usage_cost(p, t, s.period);
    double total = 0.0;
    for (Path from : kPaths) {
        const double y = s.occupancy(from, t_perceive, view);
        if (y == 0.0) continue;
        double inner = 0.0;
        for (Path to : kPaths) {
            const double u = s.select(to, from, t_perceive, view);
            if (u == 0.0) continue;
            inner += u * (usage[index(to)] + (overlay ? overlay(to, from, t_perceive) : 0.0));
        }
        total += y * inner;
    }
    return total;
}

}  // namespace

double strategy_cost_at(const Strategy& s, const CostView& view, double t, const CostOverlay& overlay)
{
    return cost_at(with_master_equation(s, view), view, t, t, overlay);
}

RelevantSpan relevant_span(const Trajectory& traj, double delta, double lookahead)
{
    if (traj.size() < 8) throw Inconclusive("trajectory too short for a relevant span");
    const auto cls = classify(traj, {delta, 0.25});
    RelevantSpan span;
    if (cls.regime == Regime::oscillating) {
        const auto& tp = traj.turning_points();
        for (std::size_t k = tp.size(); k-- > 1;) {
            if (tp[k] + lookahead <= traj.end() + 1e-12) {
                span.t0 = tp[k - 1];
                span.t1 = tp[k];
                span.periodic = true;
                return span;
            }
        }
        throw Inconclusive("periodic trajectory without a complete turning-point interval");
    }

    const double target = cls.regime == Regime::stable ? cls.limit : 0.0;
    std::ptrdiff_t last = -1;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        if (std::abs(traj.imbalance(i) - target) >= delta) last = static_cast<std::ptrdiff_t>(i);
    }
    if (last < 0) {
        span.t0 = span.t1 = traj.start();
        span.empty = true;
        return span;
    }
    const auto i = static_cast<std::size_t>(last);
    if (i + 1 >= traj.size()) throw Inconclusive("trajectory has not converged within the horizon");
    // linear crossing of the delta band between samples i and i+1
    const double d0 = std::abs(traj.imbalance(i) - target), d1 = std::abs(traj.imbalance(i + 1) - target);
    const double frac = d0 > d1 ? (d0 - delta) / (d0 - d1) : 0.0;
    span.t0 = traj.start();
    span.t1 = traj.time(i) + std::clamp(frac, 0.0, 1.0) * traj.step();
    if (span.t1 + lookahead > traj.end() + 1e-12) {
        throw Inconclusive("horizon ends before t_delta + R; extend the horizon");
    }
    return span;
}

double strategy_cost(const Strategy& s_in, const CostView& view, const RelevantSpan& span, const CostOverlay& overlay)
{
    if (span.empty) return std::pow(0.5, view.system().steepness);
    if (!(span.t1 > span.t0)) throw DomainError("relevant span must have t1 > t0");
    const Strategy s = with_master_equation(s_in, view);
    const auto& traj = view.trajectory();

    // Break points: kinks of the load, where perception flips, and where t + R meets a kink.
    std::vector<double> cuts{span.t0, span.t1};
    for (double tp : traj.turning_points()) {
        for (double c : {tp, tp - s.period, tp + view.system().delay}) {
            if (c > span.t0 && c < span.t1) cuts.push_back(c);
        }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(), [](double a, double b) { return b - a < 1e-12; }), cuts.end());

    double total = 0.0;
    const double h = traj.step();
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double a = cuts[k], b = cuts[k + 1];
        if (b - a < 1e-14) continue;
        auto m = static_cast<std::size_t>(std::ceil((b - a) / h));
        m = std::max<std::size_t>(2, m + (m % 2));
        const double dx = (b - a) / static_cast<double>(m);
        const double nudge = 1e-9 * (b - a);
        double sum = 0.0;
        for (std::size_t j = 0; j <= m; ++j) {
            const double t = j == m ? b : a + dx * static_cast<double>(j);
            const double w = (j == 0 || j == m) ? 1.0 : (j % 2 ? 4.0 : 2.0);
            sum += w * cost_at(s, view, t, std::clamp(t, a + nudge, b - nudge), overlay);
        }
        total += sum * dx / 3.0;
    }
    return total / span.length();
}

double strategy_cost(const Strategy& s, const ParallelPathSystem& sys, const Trajectory& traj,
                     const RelevantSpan& span)
{
    return strategy_cost(s, CostView(sys, traj), span);
}

CostReport pss_deviation_test(const ParallelPathSystem& sys, const Trajectory& traj, const Strategy& incumbent,
                              const std::vector<Strategy>& candidates, double delta, const CostOverlay& overlay)
{
    double lookahead = incumbent.period;
    for (const auto& c : candidates) lookahead = std::max(lookahead, c.period);
    CostReport rep;
    rep.span = relevant_span(traj, delta, lookahead);
    const CostView view(sys, traj);
    rep.incumbent = incumbent.id;
    rep.incumbent_cost = strategy_cost(incumbent, view, rep.span, overlay);
    for (const auto& c : candidates) {
        const double cost = strategy_cost(c, view, rep.span, overlay);
        rep.candidates.emplace_back(c.id, cost);
        const double gain = rep.incumbent_cost - cost;
        if (gain > kDeviationThreshold && gain > rep.gain) {
            rep.equilibrium = false;
            rep.deviant = c.id;
            rep.gain = gain;
        }
    }
    return rep;
}

double mixed_strategy_slope_analytic(double q, double r, double R, double T)
{
    if (!(q > 0.5 && q <= 1.0)) throw DomainError("slope needs greedy share q in (1/2, 1]");
    if (!(R > 0.0)) throw DomainError("slope needs R > 0");
    const auto osc = oscillation_params(r, T);
    const double W = osc.half_period;
    if (R > W + 1e-9) throw DomainError("slope needs R <= W");
    const double a = mixed_amplitude(q, r, T) + q - 1.0;
    const double num = R * ((2.0 * q - 1.0) * (W - R) + 2.0 * a / r * (std::exp(-r * W) + 1.0)) +
                       4.0 * a / (r * r) * (std::exp(-r * R) - 1.0);
    return num / (R * W);
}

SlopeResult mixed_strategy_slope(double q, double r, double R, double T)
{
    SlopeResult res{};
    res.analytic = mixed_strategy_slope_analytic(q, r, R, T);
    const double W = oscillation_params(r, T).half_period;

    ParallelPathSystem sys;
    sys.rate = r;
    sys.steepness = 1.0;
    sys.delay = T;
    sys.initial_load = mixed_amplitude(q, r, T);
    sys.profile = {{"greedy", q}, {"antagonist", 1.0 - q}};
    if (q == 1.0) sys.profile.erase("antagonist");
    const auto traj = sample_mixed(q, sys, 3.01 * W, W / 20000.0);
    const CostView view(sys, traj);

    // [W, 2W]: alpha starts below one half and is perceived cheaper
    RelevantSpan span;
    span.t0 = W;
    span.t1 = 2.0 * W;
    span.periodic = true;
    const double greedy = strategy_cost(mixed_strategy(1.0, R), view, span);
    const double antagonist = strategy_cost(mixed_strategy(0.0, R), view, span);
    res.numeric = greedy - antagonist;
    res.intercept = antagonist;
    return res;
}

double delay_for_half_period(double R, double r)
{
    if (!(R > 0.0) || !(r > 0.0)) throw DomainError("need R > 0 and r > 0");
    auto w = [r](double T) { return oscillation_params(r, T).half_period; };
    double lo = 0.0, hi = 100.0;
    if (w(hi) < R) throw NoRoot("W = R needs T > 100");
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        (mid > 0.0 && w(mid) < R ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<ComparisonRow> compare_greedy_vs_convergent(const ParallelPathSystem& sys, double mu,
                                                        const std::vector<double>& periods, double delta)
{
    if (!(mu > 0.0)) throw DomainError("mu = 0 freezes the system; no comparison possible");
    if (periods.empty()) return {};
    const double r_max = *std::max_element(periods.begin(), periods.end());
    for (double R : periods) {
        if (!(R > 0.0)) throw DomainError("re-evaluation periods must be positive");
    }

    const auto dyn = convergent_dynamics(mu);
    double horizon = std::max(100.0, 50.0 * sys.delay);
    for (int attempt = 0;; ++attempt) {
        try {
            const auto traj = integrate(sys, dyn, horizon);
            const auto span = relevant_span(traj, delta, r_max);
            const CostView view(sys, traj);
            std::vector<ComparisonRow> rows;
            for (double R : periods) {
                rows.push_back({R, strategy_cost(greedy_strategy(R), view, span),
                                strategy_cost(convergent_strategy(mu, R), view, span)});
            }
            return rows;
        } catch (const Inconclusive&) {
            if (attempt >= 4) throw;
            horizon *= 2.0;
        }
    }
}

}  // namespace oscstab
