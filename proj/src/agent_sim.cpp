#include "oscstab/agent_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "oscstab/errors.hpp"
#include "oscstab/hash.hpp"

namespace oscstab {

std::string_view to_string(MechanismKind m)
{
    switch (m) {
    case MechanismKind::none: return "none";
    case MechanismKind::floss: return "floss";
    case MechanismKind::cross: return "cross";
    }
    return "none";
}

MechanismKind mechanism_from_string(std::string_view name)
{
    if (name == "none") return MechanismKind::none;
    if (name == "floss") return MechanismKind::floss;
    if (name == "cross") return MechanismKind::cross;
    throw ConfigError("unknown mechanism '" + std::string(name) + "'");
}

void AgentRun::write_log(std::ostream& out) const
{
    out << "time,event_kind,flow_id,detail\n";
    for (const auto& line : log) out << line << '\n';
}

namespace {

enum class Rule : std::uint8_t { greedy, antagonist, convergent, stay };

Rule rule_from_name(const std::string& name)
{
    if (name == "greedy") return Rule::greedy;
    if (name == "antagonist") return Rule::antagonist;
    if (name == "convergent") return Rule::convergent;
    if (name == "stay") return Rule::stay;
    throw ConfigError("agent simulation does not know strategy '" + name + "'");
}

// Piecewise-constant count of flows on alpha, queried at stale times.
class LoadHistory {
public:
    explicit LoadHistory(std::size_t initial) { changes_.push_back({-INFINITY, initial}); }
    void record(double t, std::size_t count)
    {
        if (changes_.back().first == t) changes_.back().second = count;
        else changes_.push_back({t, count});
    }
    // state just before t: a change at exactly t is not yet visible
    std::size_t at(double t) const
    {
        auto it = std::lower_bound(changes_.begin(), changes_.end(), t,
                                   [](const auto& c, double v) { return c.first < v; });
        return std::prev(it)->second;
    }

private:
    std::vector<std::pair<double, std::size_t>> changes_;
};

struct Logger {
    bool enabled;
    std::vector<std::string>* out;
    char buf[160];

    void operator()(double t, const char* kind, std::uint64_t id, const char* detail)
    {
        if (!enabled) return;
        std::snprintf(buf, sizeof buf, "%.9f,%s,%016llx,%s", t, kind, static_cast<unsigned long long>(id), detail);
        out->emplace_back(buf);
    }
};

}  // namespace

AgentRun run_agents(std::size_t n, const ParallelPathSystem& sys, MechanismKind mechanism, double horizon,
                    std::uint64_t seed, const AgentOptions& opt)
{
    sys.validate();
    if (n < 100) throw DomainError("agent simulation needs N >= 100");
    if (!(horizon > 0.0)) throw DomainError("horizon must be positive");
    if (!(opt.step > 0.0)) throw DomainError("sampling step must be positive");
    if (!(opt.mu >= 0.0 && opt.mu <= 1.0)) throw DomainError("mu must lie in [0, 1]");
    if (mechanism == MechanismKind::floss) opt.floss.validate(sys);
    if (mechanism == MechanismKind::cross) opt.cross.validate(sys);

    double threshold = 0.0;
    if (opt.perception_threshold) threshold = *opt.perception_threshold;
    else if (mechanism == MechanismKind::floss) threshold = opt.floss.delta_stop;
    else if (mechanism == MechanismKind::cross) threshold = opt.cross.eps;

    std::mt19937_64 rng(seed);
    const double N = static_cast<double>(n);

    // largest-remainder apportionment of the profile
    std::vector<Rule> rules;
    {
        std::vector<std::pair<std::string, double>> prof(sys.profile.begin(), sys.profile.end());
        std::vector<std::size_t> counts(prof.size());
        std::vector<std::pair<double, std::size_t>> rem;
        std::size_t used = 0;
        for (std::size_t i = 0; i < prof.size(); ++i) {
            const double exact = prof[i].second * N;
            counts[i] = static_cast<std::size_t>(std::floor(exact));
            used += counts[i];
            rem.push_back({exact - std::floor(exact), i});
        }
        std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t j = 0; used < n; ++j, ++used) ++counts[rem[j % rem.size()].second];
        for (std::size_t i = 0; i < prof.size(); ++i) {
            if (counts[i] == 0) continue;
            const Rule r = rule_from_name(prof[i].first);
            rules.insert(rules.end(), counts[i], r);
        }
        std::shuffle(rules.begin(), rules.end(), rng);
    }

    const auto on_alpha0 = static_cast<std::size_t>(std::llround(sys.initial_load * N));
    std::vector<Flow> flows(n);
    std::size_t count = 0;
    for (std::size_t k = 0; k < n; ++k) {
        auto& f = flows[k];
        f.id = flow_id(seed, k);
        f.path = k < on_alpha0 ? Path::alpha : Path::beta;
        f.registered = f.path;
        f.strategy = static_cast<std::size_t>(rules[k]);
        count += f.path == Path::alpha;
    }
    if (mechanism == MechanismKind::cross) {
        for (auto& f : flows) {
            f.backup = TupleHash(0x4241434b5550ULL).add(f.id).unit() < opt.cross.backup_share;
            f.valuation = f.backup ? 2.0 * max_cost_gain(opt.cross.trial_length, sys.delay) : 0.0;
        }
    }

    AgentRun run;
    Logger log{opt.event_log, &run.log, {}};
    LoadHistory history(count);
    EventQueue queue;
    std::exponential_distribution<double> gap(sys.rate);
    for (std::size_t k = 0; k < n; ++k) {
        flows[k].next_reevaluation = gap(rng);
        queue.push(flows[k].next_reevaluation, EventKind::reevaluation, k);
    }
    const double L = mechanism == MechanismKind::floss   ? opt.floss.interval_length
                     : mechanism == MechanismKind::cross ? opt.cross.trial_length
                                                         : 0.0;
    if (mechanism != MechanismKind::none) queue.push(0.0, EventKind::boundary);
    std::vector<PathFailure> failures;
    if (mechanism == MechanismKind::cross) {
        failures = opt.cross.failures;
        std::sort(failures.begin(), failures.end(), [](const auto& a, const auto& b) { return a.time < b.time; });
        for (std::size_t i = 0; i < failures.size(); ++i) queue.push(failures[i].time, EventKind::failure, i);
    }

    const auto samples = static_cast<std::size_t>(std::floor(horizon / opt.step + 1e-9));
    std::vector<double> loads;
    loads.reserve(samples + 1);
    auto emit_until = [&](double t) {
        while (loads.size() <= samples && opt.step * static_cast<double>(loads.size()) < t) {
            loads.push_back(static_cast<double>(count) / N);
        }
    };

    bool enforcing = mechanism != MechanismKind::none;
    double released = -INFINITY;  // switches stay frozen until stale costs reflect the suspended state
    std::optional<Path> failed;
    bool failure_pending = false;
    std::size_t interval = 0;
    char detail[96];
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);

    auto move = [&](Flow& f, Path to, double t, const char* kind) {
        if (f.path == to) return;
        count += to == Path::alpha ? 1 : 0;
        count -= to == Path::alpha ? 0 : 1;
        f.path = to;
        f.registered = to;
        ++run.switches;
        history.record(t, count);
        std::snprintf(detail, sizeof detail, "to=%s", std::string(to_string(to)).c_str());
        log(t, kind, f.id, detail);
    };
    auto stale_costs = [&](double t) {
        const double fa = static_cast<double>(history.at(t - sys.delay)) / N;
        return std::pair{cost_of(fa, sys.steepness), cost_of(1.0 - fa, sys.steepness)};
    };

    while (!queue.empty() && queue.top().time <= horizon) {
        const Event ev = queue.pop();
        const double t = ev.time;
        emit_until(t);
        switch (ev.kind) {
        case EventKind::reevaluation: {
            auto& f = flows[ev.flow];
            const double next = t + gap(rng);
            f.next_reevaluation = next;
            queue.push(next, EventKind::reevaluation, ev.flow);
            ++run.reevaluations;
            if (enforcing || failed || t < released) break;  // registrations bind until the next boundary
            const auto [ca, cb] = stale_costs(t);
            const double c_from = f.path == Path::alpha ? ca : cb;
            const double c_to = f.path == Path::alpha ? cb : ca;
            const double gain = c_from - c_to;
            if (std::abs(gain) <= threshold) break;  // perceived tie: stay
            bool go = false;
            switch (static_cast<Rule>(f.strategy)) {
            case Rule::greedy: go = gain > 0.0; break;
            case Rule::antagonist: go = gain < 0.0; break;
            case Rule::convergent: go = gain > 0.0 && unit(rng) < std::min(1.0, opt.mu * gain); break;
            case Rule::stay: break;
            }
            if (go) move(f, other(f.path), t, "switch");
            break;
        }
        case EventKind::boundary: {
            if (failure_pending) {
                for (auto& f : flows) {
                    if (f.path == *failed) move(f, other(*failed), t, "failover");
                }
                failure_pending = false;
                log(t, "boundary", 0, "failover");
                break;
            }
            if (!enforcing) break;
            if (mechanism == MechanismKind::floss) {
                if (interval > 0) {
                    const double fa = static_cast<double>(count) / N;
                    const Path cheap = fa <= 0.5 ? Path::alpha : Path::beta;
                    const double f_cheap = cheap == Path::alpha ? fa : 1.0 - fa;
                    const double rho = opt.floss.kappa * max_allowance(f_cheap, 1.0 - f_cheap);
                    for (auto& f : flows) {
                        if (f.path != cheap && selective_admission(f.id, t, rho)) move(f, cheap, t, "migrate");
                    }
                }
            } else {
                for (auto& f : flows) move(f, coin(rng) ? Path::alpha : Path::beta, t, "trial");
                run.trial_loads.push_back(static_cast<double>(count) / N);
            }
            const double fa = static_cast<double>(count) / N;
            std::snprintf(detail, sizeof detail, "interval=%zu f_alpha=%.9g", interval, fa);
            log(t, "boundary", 0, detail);
            const double stop = mechanism == MechanismKind::floss ? opt.floss.delta_stop : opt.cross.eps;
            if (std::abs(2.0 * fa - 1.0) < stop) {
                // loads now hold; stale costs agree T later
                enforcing = false;
                run.suspension_time = t + sys.delay;
                released = t + sys.delay;
                log(t + sys.delay, "suspend", 0, std::string(to_string(mechanism)).c_str());
                break;
            }
            ++interval;
            queue.push(L * static_cast<double>(interval), EventKind::boundary);
            break;
        }
        case EventKind::failure: {
            if (failed) break;
            const auto& fl = failures[ev.flow];
            failed = fl.path;
            log(t, "failure", 0, std::string(to_string(fl.path)).c_str());
            for (auto& f : flows) {
                if (f.path == fl.path && f.backup) move(f, other(fl.path), t, "backup");
            }
            // the rest learn of the failure at the next boundary
            failure_pending = true;
            enforcing = false;
            const double next = L * std::floor(t / L + 1.0);
            queue.push(next, EventKind::boundary);
            break;
        }
        case EventKind::birth: break;
        }
    }
    emit_until(INFINITY);
    run.trajectory = Trajectory(0.0, opt.step, std::move(loads), Trajectory::Interpolation::hold);
    return run;
}

Allowance effective_allowance(double rho_target, double beta, double birth_rate)
{
    if (!(rho_target >= 0.0 && rho_target <= 1.0)) throw DomainError("rho must lie in [0, 1]");
    if (!(beta >= 0.0 && beta < 1.0)) throw DomainError("false-positive rate must lie in [0, 1)");
    if (!(birth_rate >= 0.0)) throw DomainError("birth rate must be >= 0");
    const double left = rho_target - beta - birth_rate;
    return {std::max(0.0, left), left <= 0.0 && rho_target > 0.0};
}

SubsampleResult subsample_enforcement(double check_rate, std::size_t packets, bool registered, std::mt19937_64& rng)
{
    if (!(check_rate > 0.0 && check_rate <= 1.0)) throw DomainError("check rate must lie in (0, 1]");
    if (registered || packets == 0) return {1.0, false};
    std::bernoulli_distribution checked(check_rate);
    const std::size_t windowed = packets / kCongestionWindow * kCongestionWindow;
    std::size_t delivered = 0;
    bool disrupted = false;
    for (std::size_t i = 0; i < packets; ++i) {
        if (checked(rng)) {
            if (i < windowed) disrupted = true;
        } else {
            ++delivered;
        }
    }
    return {static_cast<double>(delivered) / static_cast<double>(packets), disrupted};
}

ChurnResult flow_churn(double birth_rate, double death_rate, double interval_length, std::uint64_t seed,
                       const ChurnOptions& opt)
{
    if (!(birth_rate >= 0.0) || !(death_rate >= 0.0)) throw DomainError("churn rates must be >= 0");
    if (!(interval_length > 0.0)) throw DomainError("interval length must be positive");
    if (!(opt.cheap_load >= 0.0 && opt.cheap_load <= 1.0)) throw DomainError("cheap_load must lie in [0, 1]");
    if (!(opt.previous_attempts >= 0.0 && opt.previous_attempts <= 1.0)) {
        throw DomainError("previous_attempts must lie in [0, 1]");
    }
    std::mt19937_64 rng(seed);
    ChurnResult res;
    char buf[128];
    auto log = [&](double t, const char* kind, std::uint64_t id, const char* detail) {
        std::snprintf(buf, sizeof buf, "%.9f,%s,%016llx,%s", t, kind, static_cast<unsigned long long>(id), detail);
        res.log.emplace_back(buf);
    };

    // alpha is the cheaper path; each egress remembers the flows it saw last interval
    BloomFilter seen[2] = {BloomFilter(opt.bloom_bits, opt.bloom_hashes, mix64(seed ^ 1)),
                           BloomFilter(opt.bloom_bits, opt.bloom_hashes, mix64(seed ^ 2))};
    const auto n_cheap = static_cast<std::size_t>(std::llround(opt.cheap_load * static_cast<double>(opt.population)));
    std::vector<std::uint64_t> ids(opt.population);
    for (std::size_t k = 0; k < opt.population; ++k) {
        ids[k] = flow_id(seed, k);
        seen[k < n_cheap ? 0 : 1].insert(ids[k]);
    }
    res.fp_rate = seen[0].analytic_fp_rate();

    std::bernoulli_distribution dies(1.0 - std::exp(-death_rate * interval_length));
    std::bernoulli_distribution attempts(opt.previous_attempts);
    std::uniform_real_distribution<double> when(0.0, interval_length);
    for (std::size_t k = 0; k < opt.population; ++k) {
        if (dies(rng)) {
            ++res.deaths;
            log(when(rng), "death", ids[k], k < n_cheap ? "path=alpha" : "path=beta");
        } else if (attempts(rng)) {
            // previously active: every lookup finds it, so the mid-interval registration fails
            const std::size_t on = k < n_cheap ? 0 : 1;
            if (seen[1 - on].contains(ids[k]) || seen[on].contains(ids[k])) {
                ++res.previous_penalized;
                log(when(rng), "penalized", ids[k], "previously active");
            }
        }
    }

    std::poisson_distribution<std::size_t> births(birth_rate * interval_length * static_cast<double>(opt.population));
    res.births = births(rng);
    for (std::size_t j = 0; j < res.births; ++j) {
        const std::uint64_t id = flow_id(seed ^ 0x4e4557ULL, opt.population + j);
        const double t = when(rng);
        if (!seen[0].contains(id)) {
            ++res.new_registered_cheap;
            log(t, "birth", id, "registered=alpha");
        } else {
            // mistaken for a previously active flow; the other egress must still accept it
            ++res.new_denied_fp;
            ++res.new_registered_other;
            log(t, "fp_denied", id, "registered=beta");
        }
    }
    res.cheap_gain = static_cast<double>(res.new_registered_cheap) / static_cast<double>(opt.population);
    std::stable_sort(res.log.begin(), res.log.end());
    return res;
}

}  // namespace oscstab
