#include "oscstab/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "oscstab/dde.hpp"
#include "oscstab/errors.hpp"
#include "oscstab/io.hpp"
#include "oscstab/strategy_cost.hpp"

namespace oscstab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string> split_names(const std::string& list)
{
    std::vector<std::string> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string fmt_num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

void write_trajectory(const Trajectory& traj, double p, const fs::path& file, OutputFormat fmt)
{
    std::ofstream out(file);
    if (!out) throw ConfigError("cannot write " + file.string());
    if (fmt == OutputFormat::csv) {
        traj.write_csv(out, p);
        return;
    }
    json j;
    std::vector<double> t(traj.size()), fa(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        t[i] = traj.time(i);
        fa[i] = traj.load(i);
    }
    j["t"] = t;
    j["f_alpha"] = fa;
    j["turning_points"] = traj.turning_points();
    out << j.dump() << '\n';
}

fs::path write_text(const fs::path& file, const std::string& text)
{
    std::ofstream out(file);
    if (!out) throw ConfigError("cannot write " + file.string());
    out << text;
    return file;
}

void prepare(const fs::path& out)
{
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw ConfigError("cannot create output directory " + out.string());
}

const char* ext(OutputFormat f) { return f == OutputFormat::csv ? ".csv" : ".json"; }

double default_horizon(const ParallelPathSystem& sys) { return std::max(100.0, 50.0 * sys.delay); }

Strategy strategy_by_name(const std::string& name, const Scenario& sc)
{
    if (name == "greedy") return greedy_strategy(sc.period);
    if (name == "antagonist") return antagonist_strategy(sc.period);
    if (name == "convergent") return convergent_strategy(sc.pss_mu, sc.period);
    if (name == "stay") return stay_strategy(sc.period);
    if (name.rfind("mixed:", 0) == 0) return mixed_strategy(parse_number(name.substr(6), "mixing probability"), sc.period);
    throw ConfigError("unknown strategy '" + name + "'");
}

// Runs body(i) for i in [0, n) on a small pool; the first exception wins.
template <class F>
void parallel_for(std::size_t n, unsigned workers, F&& body)
{
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex m;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i; (i = next++) < n;) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(m);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

json report_json(const CostReport& r)
{
    json j;
    j["incumbent"] = r.incumbent;
    j["incumbent_cost"] = r.incumbent_cost;
    json c = json::array();
    for (const auto& [id, cost] : r.candidates) c.push_back({{"strategy", id}, {"cost", cost}});
    j["candidates"] = c;
    j["verdict"] = r.equilibrium ? "equilibrium" : "deviation";
    if (!r.equilibrium) {
        j["deviant"] = r.deviant;
        j["gain"] = r.gain;
    }
    j["span"] = {{"t0", r.span.t0}, {"t1", r.span.t1}, {"periodic", r.span.periodic}, {"empty", r.span.empty}};
    return j;
}

json incentive_json(const IncentiveReport& r)
{
    json j{{"verdict", r.equilibrium ? "equilibrium" : "violation"}, {"cases", r.cases}};
    if (!r.equilibrium) j["violation"] = r.violation;
    return j;
}

}  // namespace

OutputFormat format_from_string(std::string_view s)
{
    if (s == "csv") return OutputFormat::csv;
    if (s == "json") return OutputFormat::json;
    throw ConfigError("format must be csv or json");
}

Scenario read_scenario(const KeyValueConfig& cfg, std::string name)
{
    cfg.require_sections({"", "profile", "run", "pss", "floss", "cross"});
    cfg.require_known("", {"r", "p", "T", "A0"});
    cfg.require_known("run", {"model", "horizon", "step", "dynamics", "mu", "gamma", "agents", "mechanism",
                              "perception", "omegas"});
    cfg.require_known("pss", {"test", "incumbent", "candidates", "mu", "R", "delta", "periods", "q", "overlay"});

    Scenario sc;
    sc.name = std::move(name);
    sc.sys = read_system(cfg);

    if (auto v = cfg.get("run", "model")) sc.model = *v;
    if (sc.model != "closed-form" && sc.model != "dde" && sc.model != "agents") {
        throw ConfigError("[run] model must be closed-form, dde or agents");
    }
    if (auto v = cfg.get("run", "horizon")) {
        if (v->empty()) throw ConfigError("[run] horizon is empty");
        sc.horizon = parse_number(*v, "[run] horizon");
        if (!(*sc.horizon > 0.0)) throw ConfigError("[run] horizon must be positive");
    }
    sc.step = cfg.number("run", "step");
    if (sc.step && !(*sc.step > 0.0)) throw ConfigError("[run] step must be positive");
    if (auto v = cfg.get("run", "dynamics")) sc.dynamics = *v;
    sc.mu = cfg.numbers("run", "mu");
    sc.gamma = cfg.numbers("run", "gamma");
    if (auto v = cfg.number("run", "agents")) {
        if (!(*v >= 100.0) || *v != std::floor(*v)) throw ConfigError("[run] agents must be an integer >= 100");
        sc.agents = static_cast<std::size_t>(*v);
    }
    if (auto v = cfg.get("run", "mechanism")) {
        const auto m = mechanism_from_string(*v);
        sc.agent_mechanism = m;
        if (m != MechanismKind::none) sc.mechanism = m;
    }
    sc.perception_threshold = cfg.number("run", "perception");
    sc.omegas = cfg.numbers("run", "omegas");

    sc.floss = read_floss_config(cfg);
    sc.cross = read_cross_config(cfg);
    if (sc.mechanism == MechanismKind::floss) sc.floss.validate(sc.sys);
    if (sc.mechanism == MechanismKind::cross) sc.cross.validate(sc.sys);

    if (auto v = cfg.get("pss", "test")) sc.pss_test = *v;
    if (sc.pss_test != "deviation" && sc.pss_test != "compare" && sc.pss_test != "slope") {
        throw ConfigError("[pss] test must be deviation, compare or slope");
    }
    if (auto v = cfg.get("pss", "incumbent")) sc.incumbent = *v;
    if (auto v = cfg.get("pss", "candidates")) sc.candidates = split_names(*v);
    sc.pss_mu = cfg.number("pss", "mu", sc.pss_mu);
    sc.period = cfg.number("pss", "R", sc.period);
    sc.delta = cfg.number("pss", "delta", sc.delta);
    sc.periods = cfg.numbers("pss", "periods");
    sc.greedy_share = cfg.number("pss", "q", sc.greedy_share);
    if (auto v = cfg.get("pss", "overlay")) sc.overlay = *v;
    if (sc.overlay != "none" && sc.overlay != "floss") throw ConfigError("[pss] overlay must be none or floss");
    if (!(sc.period > 0.0)) throw ConfigError("[pss] R must be positive");
    if (!(sc.delta > 0.0)) throw ConfigError("[pss] delta must be positive");
    for (double R : sc.periods) {
        if (!(R > 0.0)) throw ConfigError("[pss] periods must be positive");
    }
    // strategy names are checked up front so typos fail before any work
    for (const auto& c : sc.candidates) strategy_by_name(c, sc);
    return sc;
}

Scenario load_scenario(const fs::path& file)
{
    return read_scenario(KeyValueConfig::load(file), file.stem().string());
}

RunOutput cmd_simulate(const Scenario& sc, const fs::path& out, std::uint64_t seed, OutputFormat fmt,
                       unsigned workers)
{
    if (!sc.horizon) throw ConfigError("simulate needs [run] horizon");
    const double horizon = *sc.horizon;
    const auto& sys = sc.sys;
    prepare(out);
    RunOutput res;
    json summary{{"scenario", sc.name}, {"model", sc.model}, {"horizon", horizon}};

    if (sc.model == "closed-form") {
        double q = 1.0;
        for (const auto& [name, s] : sys.profile) {
            if (name == "greedy") q = s;
            else if (name != "antagonist" && s != 0.0) {
                throw ConfigError("closed form covers greedy/antagonist profiles only");
            }
        }
        if (!sys.profile.contains("greedy")) q = 0.0;
        const double step = sc.step.value_or(sys.delay > 0.0 ? sys.delay / 1000.0 : 0.01);
        const auto traj = sample_mixed(q, sys, horizon, step);
        const auto file = out / (sc.name + ext(fmt));
        write_trajectory(traj, sys.steepness, file, fmt);
        res.files.push_back(file);
        summary["greedy_share"] = q;
        summary["turning_points"] = traj.turning_points();
        if (sys.delay > 0.0) {
            const auto op = oscillation_params(sys.rate, sys.delay);
            summary["A"] = op.amplitude;
            summary["W"] = op.half_period;
        }
    } else if (sc.model == "dde") {
        if (sys.delay <= 0.0) throw StepTooLarge("the DDE engine needs T > 0");
        const double step = sc.step.value_or(sys.delay / 1000.0);
        std::vector<std::pair<std::string, std::map<std::string, double, std::less<>>>> runs;
        if (sc.dynamics == "convergent") {
            if (sc.mu.empty()) throw ConfigError("convergent dynamics need [run] mu");
            for (double m : sc.mu) runs.push_back({"_mu" + fmt_num(m), {{"mu", m}}});
        } else if (sc.dynamics == "mate") {
            if (sc.gamma.empty()) throw ConfigError("mate dynamics need [run] gamma");
            for (double g : sc.gamma) runs.push_back({"_gamma" + fmt_num(g), {{"gamma", g}}});
        } else {
            runs.push_back({"", {}});
        }
        std::vector<Dynamics> dyn;
        for (const auto& r : runs) dyn.push_back(dynamics_by_name(sc.dynamics, r.second));
        std::vector<json> rows(runs.size());
        std::vector<fs::path> files(runs.size());
        parallel_for(runs.size(), workers, [&](std::size_t i) {
            const auto traj = integrate(sys, dyn[i], History::constant(sys.initial_load), horizon, step);
            files[i] = out / (sc.name + runs[i].first + ext(fmt));
            write_trajectory(traj, sys.steepness, files[i], fmt);
            json row{{"file", files[i].filename().string()}, {"dynamics", sc.dynamics}, {"params", runs[i].second}};
            row["turning_points"] = traj.turning_points().size();
            try {
                const auto v = classify_damping(traj);
                row["damping"] = to_string(v.kind);
                row["envelope_ratio"] = v.envelope_ratio;
            } catch (const Inconclusive&) {
                row["damping"] = "inconclusive";
            }
            rows[i] = std::move(row);
        });
        res.files = files;
        summary["runs"] = rows;
    } else {
        AgentOptions opt;
        opt.step = sc.step.value_or(0.01);
        if (!sc.mu.empty()) opt.mu = sc.mu.front();
        opt.perception_threshold = sc.perception_threshold;
        opt.floss = sc.floss;
        opt.cross = sc.cross;
        const auto run = run_agents(sc.agents, sys, sc.agent_mechanism, horizon, seed, opt);
        const auto file = out / (sc.name + ext(fmt));
        write_trajectory(run.trajectory, sys.steepness, file, fmt);
        std::ofstream log(out / (sc.name + "_events.csv"));
        run.write_log(log);
        res.files = {file, out / (sc.name + "_events.csv")};
        summary["agents"] = sc.agents;
        summary["mechanism"] = to_string(sc.agent_mechanism);
        summary["switches"] = run.switches;
        summary["reevaluations"] = run.reevaluations;
        if (run.suspension_time) summary["suspension_time"] = *run.suspension_time;
    }
    summary["seed"] = seed;
    res.summary = summary.dump(2);
    return res;
}

RunOutput cmd_pss_test(const Scenario& sc, const fs::path& out, std::uint64_t seed, OutputFormat fmt)
{
    const auto& sys = sc.sys;
    prepare(out);
    json j{{"scenario", sc.name}, {"test", sc.pss_test}};

    if (sc.pss_test == "compare") {
        auto periods = sc.periods;
        if (periods.empty()) {
            for (int i = 1; i <= 20; ++i) periods.push_back(0.05 * i);
        }
        const auto rows = compare_greedy_vs_convergent(sys, sc.pss_mu, periods, sc.delta);
        json table = json::array();
        bool greedy_lower = true;
        std::ostringstream csv;
        {
            CsvWriter w(csv, {"R", "cost_greedy", "cost_convergent"});
            for (const auto& r : rows) {
                w.row({r.period, r.cost_greedy, r.cost_convergent});
                table.push_back({{"R", r.period}, {"greedy", r.cost_greedy}, {"convergent", r.cost_convergent}});
                greedy_lower = greedy_lower && r.cost_greedy < r.cost_convergent;
            }
        }
        j["mu"] = sc.pss_mu;
        j["rows"] = table;
        j["verdict"] = greedy_lower ? "deviation" : "mixed";
        RunOutput res;
        if (fmt == OutputFormat::csv) res.files.push_back(write_text(out / (sc.name + ".csv"), csv.str()));
        res.summary = j.dump(2);
        res.files.push_back(write_text(out / (sc.name + ".json"), res.summary + "\n"));
        return res;
    }

    if (sc.pss_test == "slope") {
        auto periods = sc.periods;
        if (periods.empty()) periods.push_back(sc.period);
        json rows = json::array();
        for (double R : periods) {
            const auto s = mixed_strategy_slope(sc.greedy_share, sys.rate, R, sys.delay);
            rows.push_back({{"R", R}, {"analytic", s.analytic}, {"numeric", s.numeric}, {"intercept", s.intercept}});
        }
        j["q"] = sc.greedy_share;
        j["rows"] = rows;
        RunOutput res;
        res.summary = j.dump(2);
        res.files.push_back(write_text(out / (sc.name + ".json"), res.summary + "\n"));
        return res;
    }

    if (sc.overlay == "floss") {
        // during enforcement every choice is checked against the mechanism costs
        const auto run = simulate_floss(sys, sc.floss, seed);
        const auto rep = floss_incentive_check(sys, sc.floss, run);
        j["overlay"] = "floss";
        j["incentive"] = incentive_json(rep);
        j["verdict"] = rep.equilibrium ? "equilibrium" : "deviation";
        RunOutput res;
        res.summary = j.dump(2);
        res.files.push_back(write_text(out / (sc.name + ".json"), res.summary + "\n"));
        return res;
    }

    const double horizon = sc.horizon.value_or(default_horizon(sys));
    Trajectory traj;
    if (sc.incumbent == "greedy" || sc.incumbent == "antagonist" || sc.incumbent.rfind("mixed:", 0) == 0) {
        if (sys.delay <= 0.0) throw DomainError("deviation tests need T > 0");
        const double step = sc.step.value_or(sys.delay / 1000.0);
        double q = sc.incumbent == "greedy" ? 1.0 : sc.incumbent == "antagonist" ? 0.0
                                                                                 : parse_number(sc.incumbent.substr(6), "q");
        traj = sample_mixed(q, sys, horizon, step);
    } else if (sc.incumbent == "convergent") {
        if (sys.delay <= 0.0) throw DomainError("deviation tests need T > 0");
        traj = integrate(sys, convergent_dynamics(sc.pss_mu), History::constant(sys.initial_load), horizon,
                         sc.step.value_or(sys.delay / 1000.0));
    } else {
        throw ConfigError("unsupported incumbent '" + sc.incumbent + "'");
    }
    std::vector<Strategy> cands;
    for (const auto& c : sc.candidates) cands.push_back(strategy_by_name(c, sc));
    const auto rep = pss_deviation_test(sys, traj, strategy_by_name(sc.incumbent, sc), cands, sc.delta);
    auto body = report_json(rep);
    body["scenario"] = sc.name;
    body["test"] = "deviation";
    RunOutput res;
    res.summary = body.dump(2);
    res.files.push_back(write_text(out / (sc.name + ".json"), res.summary + "\n"));
    if (fmt == OutputFormat::csv) {
        const auto file = out / (sc.name + "_trajectory.csv");
        write_trajectory(traj, sys.steepness, file, fmt);
        res.files.push_back(file);
    }
    return res;
}

RunOutput cmd_mechanism(const Scenario& sc, const fs::path& out, std::uint64_t seed, OutputFormat fmt)
{
    if (!sc.mechanism) throw ConfigError("mechanism needs [run] mechanism = floss or cross");
    const auto& sys = sc.sys;
    prepare(out);
    RunOutput res;
    json j{{"scenario", sc.name}, {"mechanism", to_string(*sc.mechanism)}, {"seed", seed}};
    const auto file = out / (sc.name + ext(fmt));

    if (*sc.mechanism == MechanismKind::floss) {
        const auto run = simulate_floss(sys, sc.floss, seed);
        if (fmt == OutputFormat::csv) {
            std::ofstream o(file);
            run.write_csv(o, sys.steepness);
        } else {
            write_trajectory(run.trajectory, sys.steepness, file, fmt);
        }
        json iv = json::array();
        for (const auto& i : run.intervals) {
            iv.push_back({{"index", i.index}, {"start", i.start}, {"f_alpha", i.f_alpha}, {"delta", i.delta},
                          {"rho", i.rho_applied}});
        }
        j["intervals"] = iv;
        j["intervals_used"] = run.intervals_used;
        if (run.suspension_time) j["suspension_time"] = *run.suspension_time;
        j["incentive"] = incentive_json(floss_incentive_check(sys, sc.floss, run));
    } else {
        const auto& cfg = sc.cross;
        const auto run = simulate_cross(sys, cfg, seed);
        if (fmt == OutputFormat::csv) {
            std::ofstream o(file);
            run.write_csv(o, sys.steepness, cfg.backup_share);
        } else {
            write_trajectory(run.trajectory, sys.steepness, file, fmt);
        }
        auto omegas = sc.omegas;
        const double gain = max_cost_gain(cfg.trial_length, sys.delay);
        if (omegas.empty()) {
            for (int i = 1; i <= 100; ++i) omegas.push_back(2.0 * gain * i / 100.0);
        }
        json tr = json::array();
        for (const auto& t : run.trials) tr.push_back({{"index", t.index}, {"start", t.start}, {"delta", t.delta}});
        j["trials"] = tr;
        j["trials_used"] = run.trials_used;
        j["difficulty"] = choose_difficulty(cfg.trial_length, sys.delay, cfg.c_h);
        j["p_converge"] = cfg.sigma_split > 0.0 ? convergence_probability(cfg.eps, cfg.sigma_split) : 1.0;
        if (run.suspension_time) j["suspension_time"] = *run.suspension_time;
        json fe = json::array();
        for (const auto& f : run.failure_events) {
            fe.push_back({{"path", to_string(f.path)}, {"time", f.time}, {"immediate_shift", f.immediate_shift},
                          {"boundary_time", f.boundary_time}});
        }
        j["failures"] = fe;
        j["incentive"] = incentive_json(cross_incentive_check(sys, cfg, run, omegas));
    }
    res.files.push_back(file);
    res.summary = j.dump(2);
    res.files.push_back(write_text(out / (sc.name + "_report.json"), res.summary + "\n"));
    return res;
}

std::string cmd_params(double rate, double delay)
{
    const auto op = oscillation_params(rate, delay);
    char buf[96];
    std::snprintf(buf, sizeof buf, "A = %.7f\nW = %.7f\n", op.amplitude, op.half_period);
    return buf;
}

}  // namespace oscstab
