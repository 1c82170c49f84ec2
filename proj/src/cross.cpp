#include "oscstab/cross.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>
#include <thread>

#include "oscstab/errors.hpp"
#include "oscstab/hash.hpp"
#include "oscstab/io.hpp"

namespace oscstab {

void CrossConfig::validate(const ParallelPathSystem& sys) const
{
    if (!(trial_length > sys.delay)) throw ConfigError("CROSS needs trial length L > T");
    if (!(eps > 0.0)) throw ConfigError("eps must be positive");
    if (!(c_h > 0.0)) throw ConfigError("c_h must be positive");
    if (!(c_p > c_a) || !(c_a > 0.0)) throw ConfigError("need 0 < c_a < c_p");
    if (!(sigma_split >= 0.0)) throw ConfigError("sigma_split must be >= 0");
    if (!(backup_share >= 0.0 && backup_share <= 1.0)) throw ConfigError("backup_share must lie in [0, 1]");
    if (!(step > 0.0) || !(horizon > 0.0)) throw ConfigError("step and horizon must be positive");
    for (const auto& f : failures) {
        if (!(f.time >= 0.0)) throw ConfigError("failure times must be >= 0");
        if (f.path != failures.front().path) throw ConfigError("failing both paths leaves no usable path");
    }
}

CrossConfig read_cross_config(const KeyValueConfig& cfg)
{
    cfg.require_known("cross", {"L", "eps", "c_a", "c_p", "c_h", "sigma_split", "backup_share", "failures", "step",
                                "horizon"});
    CrossConfig c;
    c.trial_length = cfg.number("cross", "L", c.trial_length);
    c.eps = cfg.number("cross", "eps", c.eps);
    c.c_a = cfg.number("cross", "c_a", c.c_a);
    c.c_p = cfg.number("cross", "c_p", c.c_p);
    c.c_h = cfg.number("cross", "c_h", c.c_h);
    c.sigma_split = cfg.number("cross", "sigma_split", c.sigma_split);
    c.backup_share = cfg.number("cross", "backup_share", c.backup_share);
    c.step = cfg.number("cross", "step", c.step);
    c.horizon = cfg.number("cross", "horizon", c.horizon);
    if (const auto list = cfg.get("cross", "failures"); list && !list->empty()) {
        std::size_t pos = 0;
        while (pos <= list->size()) {
            const auto comma = list->find(',', pos);
            std::string item = list->substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            item.erase(0, item.find_first_not_of(" \t"));
            item.erase(item.find_last_not_of(" \t") + 1);
            const auto at = item.find('@');
            if (at == std::string::npos) throw ConfigError("[cross] failures entries look like beta@12.5");
            c.failures.push_back({path_from_string(item.substr(0, at)), parse_number(item.substr(at + 1), "failure time")});
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
    }
    return c;
}

double expected_hash_utility(double difficulty, double omega, double c_h)
{
    return std::exp2(-difficulty) * omega - c_h;
}

double max_cost_gain(double trial_length, double delay)
{
    if (!(trial_length > delay)) throw DomainError("need L > T");
    return trial_length - delay;
}

double choose_difficulty(double trial_length, double delay, double c_h)
{
    if (!(c_h > 0.0)) throw DomainError("c_h must be positive");
    const double gain = max_cost_gain(trial_length, delay);
    double d = std::max(0.0, std::log2(gain / c_h));
    // rounding may leave the indifference point a hair positive
    while (expected_hash_utility(d, gain, c_h) > 0.0) d = std::nextafter(d, std::numeric_limits<double>::infinity());
    return d;
}

double puzzle_hash(const Puzzle& pz, std::uint64_t s)
{
    return TupleHash(0x50555a5a4c45ULL)
        .add(static_cast<std::uint64_t>(index(pz.path)))
        .add(pz.trial_start)
        .add(pz.host)
        .add(s)
        .unit();
}

bool verify_puzzle(const Puzzle& pz, std::uint64_t s) { return puzzle_hash(pz, s) <= std::exp2(-pz.difficulty); }

std::optional<std::uint64_t> solve_puzzle(const Puzzle& pz, std::uint64_t max_attempts, unsigned workers)
{
    if (max_attempts < 1) throw DomainError("max_attempts must be >= 1");
    workers = std::max(1u, workers);
    if (workers == 1) {
        for (std::uint64_t s = 0; s < max_attempts; ++s) {
            if (verify_puzzle(pz, s)) return s;
        }
        return std::nullopt;
    }
    // strided search; every worker stops once a lower hit is known
    std::atomic<std::uint64_t> best{max_attempts};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::uint64_t s = w; s < max_attempts && s < best.load(std::memory_order_relaxed); s += workers) {
                if (verify_puzzle(pz, s)) {
                    std::uint64_t cur = best.load();
                    while (s < cur && !best.compare_exchange_weak(cur, s)) {
                    }
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (best.load() >= max_attempts) return std::nullopt;
    return best.load();
}

double convergence_probability(double eps, double sigma)
{
    if (!(eps > 0.0)) throw DomainError("eps must be positive");
    if (!(sigma > 0.0)) throw DomainError("sigma_split must be positive");
    if (std::isinf(eps)) return 1.0;
    return std::erf(eps / 2.0 / (sigma * std::sqrt(2.0)));
}

CrossRun simulate_cross(const ParallelPathSystem& sys, const CrossConfig& cfg, std::uint64_t seed)
{
    sys.validate();
    cfg.validate(sys);
    const double L = cfg.trial_length;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> split(0.5, cfg.sigma_split);
    auto draw = [&] {
        if (cfg.sigma_split == 0.0) return 0.5;
        for (;;) {
            const double f = split(rng);
            if (f >= 0.0 && f <= 1.0) return f;
        }
    };

    auto failures = cfg.failures;
    std::sort(failures.begin(), failures.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
    std::size_t next_failure = 0;

    CrossRun run;
    std::vector<std::pair<double, double>> changes;  // (time, f_alpha)
    double f = 0.5;
    bool suspended = false;
    std::optional<Path> failed;
    bool pending_move = false;

    for (std::size_t i = 0;; ++i) {
        const double t_i = L * static_cast<double>(i);
        while (!failed && next_failure < failures.size() && failures[next_failure].time < t_i) {
            const auto& fl = failures[next_failure++];
            const double on_failed = fl.path == Path::alpha ? f : 1.0 - f;
            const double shift = cfg.backup_share * on_failed;
            f += fl.path == Path::alpha ? -shift : shift;
            changes.emplace_back(fl.time, f);
            run.failure_events.push_back({fl.path, fl.time, shift, t_i});
            failed = fl.path;
            pending_move = true;
        }
        if (t_i > cfg.horizon) break;
        if (pending_move) {
            // non-holders learn of the failure at the boundary and re-register on the survivor
            f = *failed == Path::alpha ? 0.0 : 1.0;
            changes.emplace_back(t_i, f);
            pending_move = false;
            continue;
        }
        if (failed || suspended) continue;
        f = draw();
        changes.emplace_back(t_i, f);
        const double delta = std::abs(2.0 * f - 1.0);
        run.trials.push_back({i, t_i, f, delta});
        ++run.trials_used;
        if (delta < cfg.eps) {
            suspended = true;
            run.suspension_time = t_i + sys.delay;
        }
    }

    const auto n = static_cast<std::size_t>(std::llround(cfg.horizon / cfg.step));
    std::vector<double> loads(n + 1);
    std::size_t k = 0;
    for (std::size_t j = 0; j <= n; ++j) {
        const double t = cfg.step * static_cast<double>(j);
        while (k + 1 < changes.size() && changes[k + 1].first <= t + 1e-12) ++k;
        loads[j] = changes.empty() ? 0.5 : changes[k].second;
    }
    run.trajectory = Trajectory(0.0, cfg.step, std::move(loads), Trajectory::Interpolation::hold);
    return run;
}

void CrossRun::write_csv(std::ostream& out, double steepness, double backup_share) const
{
    CsvWriter csv(out, {"t", "f_alpha", "f_beta", "c_alpha", "c_beta", "trial_index", "delta_at_trial",
                        "backup_share"});
    std::size_t k = 0;
    for (std::size_t j = 0; j < trajectory.size(); ++j) {
        const double t = trajectory.time(j);
        while (k + 1 < trials.size() && trials[k + 1].start <= t + 1e-12) ++k;
        const double fa = trajectory.load(j);
        const double idx = trials.empty() ? 0.0 : static_cast<double>(trials[k].index);
        const double d = trials.empty() ? 0.0 : trials[k].delta;
        csv.row({t, fa, 1.0 - fa, cost_of(fa, steepness), cost_of(1.0 - fa, steepness), idx, d, backup_share});
    }
}

IncentiveReport cross_incentive_check(const ParallelPathSystem& sys, const CrossConfig& cfg, const CrossRun& run,
                                      const std::vector<double>& omegas)
{
    IncentiveReport rep;
    const double L = cfg.trial_length;
    const double gain_max = max_cost_gain(L, sys.delay);
    const double difficulty = choose_difficulty(L, sys.delay, cfg.c_h);
    char buf[160];
    auto fail = [&](double omega, double t, const char* what) {
        if (rep.equilibrium) {
            std::snprintf(buf, sizeof buf, "omega=%.9g t=%.9g: %s", omega, t, what);
            rep.violation = buf;
        }
        rep.equilibrium = false;
    };

    for (double omega : omegas) {
        // (a) puzzle solving pays off exactly above the maximal gain
        const bool solves = expected_hash_utility(difficulty, omega, cfg.c_h) > 0.0;
        ++rep.cases;
        if (solves != (omega > gain_max)) fail(omega, 0.0, "puzzle decision disagrees with the gain bound");

        for (const auto& tr : run.trials) {
            const double c_alpha = cost_of(tr.f_alpha, sys.steepness);
            const double c_beta = cost_of(1.0 - tr.f_alpha, sys.steepness);
            // (b) the gain visible from t_i + T until the next trial never beats the backup value
            const double gain = (L - sys.delay) * std::abs(c_alpha - c_beta);
            ++rep.cases;
            if (gain > gain_max) fail(omega, tr.start, "achievable gain exceeds L - T");
            if (solves && !(omega > gain)) fail(omega, tr.start, "backup holder gains by opportunistic switching");
            // (c) registering beats riding unregistered
            ++rep.cases;
            const double worst = std::max(c_alpha, c_beta) + cfg.c_a;
            if (!(worst < std::min(c_alpha, c_beta) + cfg.c_p)) fail(omega, tr.start, "penalty does not dominate");
        }
    }
    return rep;
}

}  // namespace oscstab
