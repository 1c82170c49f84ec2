#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "oscstab/errors.hpp"
#include "oscstab/io.hpp"
#include "oscstab/model.hpp"

namespace oscstab {

namespace {

double clamp_load(double f)
{
    if (!std::isfinite(f)) throw NonFinite("non-finite load in trajectory");
    return std::clamp(f, 0.0, 1.0);
}

}  // namespace

Trajectory::Trajectory(double start, double step, std::vector<double> load_alpha, Interpolation interpolation)
    : start_(start), step_(step), loads_(std::move(load_alpha)), interpolation_(interpolation)
{
    if (!(step > 0.0) || !std::isfinite(step)) throw DomainError("trajectory step must be positive");
    for (auto& f : loads_) f = clamp_load(f);
}

double Trajectory::imbalance(std::size_t i) const { return std::abs(2.0 * loads_[i] - 1.0); }

bool Trajectory::covers(double t) const
{
    if (loads_.empty()) return false;
    const double tol = 1e-9 * step_;
    return t >= start_ - tol && t <= end() + tol;
}

double cubic_lagrange(const double (&y)[4], double x)
{
    const double x0 = x, x1 = x - 1.0, x2 = x - 2.0, x3 = x - 3.0;
    return -y[0] * x1 * x2 * x3 / 6.0 + y[1] * x0 * x2 * x3 / 2.0 - y[2] * x0 * x1 * x3 / 2.0 +
           y[3] * x0 * x1 * x2 / 6.0;
}

double Trajectory::load_at(double t) const
{
    if (!covers(t)) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "time %.9g outside trajectory [%.9g, %.9g]", t, start_, end());
        throw OutOfRange(buf);
    }
    const std::size_t n = loads_.size();
    const double u = std::clamp((t - start_) / step_, 0.0, static_cast<double>(n - 1));
    auto i = static_cast<std::size_t>(u);
    if (i >= n - 1) i = n - 1;
    const double frac = u - static_cast<double>(i);
    if (frac == 0.0) return loads_[i];
    if (interpolation_ == Interpolation::hold) {
        // snap tiny rounding below a grid node
        if (1.0 - frac < 1e-9) return loads_[i + 1];
        return loads_[i];
    }
    if (n < 4) return loads_[i] + frac * (loads_[i + 1] - loads_[i]);
    const std::size_t j = std::min(i > 0 ? i - 1 : 0, n - 4);
    const double y[4] = {loads_[j], loads_[j + 1], loads_[j + 2], loads_[j + 3]};
    return std::clamp(cubic_lagrange(y, u - static_cast<double>(j)), 0.0, 1.0);
}

void Trajectory::set_turning_points(std::vector<double> tp)
{
    std::sort(tp.begin(), tp.end());
    turning_points_ = std::move(tp);
}

void Trajectory::write_csv(std::ostream& out, double steepness) const
{
    CsvWriter csv(out, {"t", "f_alpha", "f_beta", "c_alpha", "c_beta"});
    for (std::size_t i = 0; i < loads_.size(); ++i) {
        const double fa = loads_[i];
        const double fb = 1.0 - fa;
        csv.row({time(i), fa, fb, cost_of(fa, steepness), cost_of(fb, steepness)});
    }
}

Classification classify(const Trajectory& traj, const ClassifyOptions& opt)
{
    if (traj.size() < 8) throw Inconclusive("trajectory too short to classify");
    if (!(opt.tail_fraction > 0.0 && opt.tail_fraction <= 1.0)) throw DomainError("tail_fraction must lie in (0, 1]");
    const std::size_t n = traj.size();
    const auto first = static_cast<std::size_t>(std::floor(static_cast<double>(n - 1) * (1.0 - opt.tail_fraction)));
    const double t_first = traj.time(first);

    double sup = 0.0, sum = 0.0;
    for (std::size_t i = first; i < n; ++i) {
        const double d = traj.imbalance(i);
        sup = std::max(sup, d);
        sum += d;
    }
    if (sup < opt.threshold) return {Regime::stable_equal_load, 0.0};

    // Signed imbalance variation catches oscillation around a nonzero level too.
    double slo = 2.0, shi = -2.0;
    for (std::size_t i = first; i < n; ++i) {
        const double s = 2.0 * traj.load(i) - 1.0;
        slo = std::min(slo, s);
        shi = std::max(shi, s);
    }
    if (shi - slo < opt.threshold) return {Regime::stable, sum / static_cast<double>(n - first)};

    std::size_t tail_tp = 0;
    if (!traj.turning_points().empty()) {
        for (double tp : traj.turning_points()) tail_tp += tp >= t_first ? 1 : 0;
    } else {
        for (std::size_t i = first + 1; i < n; ++i) {
            if ((traj.load(i - 1) - 0.5) * (traj.load(i) - 0.5) < 0.0) ++tail_tp;
        }
    }

    if (tail_tp < 2) {
        throw Inconclusive("tail holds fewer than two turning points and has not settled; extend the horizon");
    }
    // Envelope: peak imbalance of the later half of the tail against the earlier half.
    const std::size_t mid = first + (n - first) / 2;
    double early = 0.0, late = 0.0;
    for (std::size_t i = first; i < n; ++i) (i < mid ? early : late) = std::max(i < mid ? early : late, traj.imbalance(i));
    if (late < 0.99 * early) throw Inconclusive("oscillation envelope is still decaying; extend the horizon");
    return {Regime::oscillating, 0.0};
}

}  // namespace oscstab
