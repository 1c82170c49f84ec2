#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "oscstab/cross.hpp"
#include "oscstab/floss.hpp"
#include "oscstab/model.hpp"

namespace oscstab {

/// 64-bit flow identifier from immutable (src, dst) surrogate attributes.
std::uint64_t flow_id(std::uint64_t src, std::uint64_t dst);

/// Hash-threshold admission: granted iff h(t_i || f) < rho.
bool selective_admission(std::uint64_t flow, double interval_start, double rho);

class BloomFilter {
public:
    BloomFilter(std::size_t bits, unsigned hashes, std::uint64_t seed = 0);

    void insert(std::uint64_t key);
    bool contains(std::uint64_t key) const;
    void clear();

    std::size_t bits() const { return bits_; }
    unsigned hashes() const { return k_; }
    std::size_t inserted() const { return n_; }
    /// (1 - e^{-kn/m})^k
    double analytic_fp_rate() const;

private:
    std::size_t bits_;
    unsigned k_;
    std::uint64_t seed_;
    std::size_t n_ = 0;
    std::vector<std::uint64_t> words_;
};

enum class EventKind : std::uint8_t { reevaluation, boundary, failure, birth };

struct Event {
    double time;
    std::uint64_t seq;
    EventKind kind;
    std::size_t flow;
};

/// Time-ordered queue; equal times leave in insertion order.
class EventQueue {
public:
    void push(double time, EventKind kind, std::size_t flow = 0);
    Event pop();
    const Event& top() const { return heap_.top(); }
    bool empty() const { return heap_.empty(); }
    std::size_t size() const { return heap_.size(); }

private:
    struct Later {
        bool operator()(const Event& a, const Event& b) const
        {
            return a.time != b.time ? a.time > b.time : a.seq > b.seq;
        }
    };
    std::priority_queue<Event, std::vector<Event>, Later> heap_;
    std::uint64_t seq_ = 0;
};

struct Flow {
    std::uint64_t id;
    Path path;
    std::size_t strategy;    ///< index into the run's strategy names
    double next_reevaluation;
    Path registered;
    bool backup = false;     ///< CROSS backup registration held
    double valuation = 0.0;  ///< omega
};

enum class MechanismKind { none, floss, cross };
std::string_view to_string(MechanismKind m);
MechanismKind mechanism_from_string(std::string_view name);

struct AgentOptions {
    double step = 0.01;           ///< sampling step of the empirical trajectory
    double mu = 0.5;              ///< for "convergent" flows
    bool event_log = true;
    /// Perceived cost differences below this count as a tie. Defaults to
    /// delta_stop / eps in mechanism runs and 0 otherwise.
    std::optional<double> perception_threshold;
    FlossConfig floss;
    CrossConfig cross;
};

struct AgentRun {
    Trajectory trajectory;
    std::vector<std::string> log;  ///< `time,event_kind,flow_id,detail`
    std::size_t switches = 0;
    std::size_t reevaluations = 0;
    std::optional<double> suspension_time;
    std::vector<double> trial_loads;  ///< f_alpha at each balancing trial (CROSS)

    void write_log(std::ostream& out) const;
};

/// Finite-N discrete-event simulation with per-flow exponential
/// re-evaluation clocks and stale observations read T in the past.
AgentRun run_agents(std::size_t flows, const ParallelPathSystem& sys, MechanismKind mechanism, double horizon,
                    std::uint64_t seed, const AgentOptions& opt = {});

struct Allowance {
    double enforced;
    bool exhausted;  ///< discounts consumed the whole target
};

/// max(0, rho - beta - b)
Allowance effective_allowance(double rho_target, double bloom_fp_rate, double birth_rate);

struct SubsampleResult {
    double delivered;  ///< fraction of packets delivered
    bool disrupted;    ///< a drop fell inside a complete 100-packet window
};

inline constexpr std::size_t kCongestionWindow = 100;

SubsampleResult subsample_enforcement(double check_rate, std::size_t packets, bool registered, std::mt19937_64& rng);

struct ChurnResult {
    std::size_t births = 0;
    std::size_t deaths = 0;
    std::size_t new_registered_cheap = 0;   ///< new flows registered on the cheaper path
    std::size_t new_denied_fp = 0;          ///< new flows mistaken for previously active ones
    std::size_t new_registered_other = 0;   ///< of those, registered on the other path instead
    std::size_t previous_penalized = 0;     ///< previously active flows refused a mid-interval registration
    double cheap_gain = 0.0;                ///< load gained by the cheaper path from births
    double fp_rate = 0.0;                   ///< analytic false-positive rate of the egress filters
    std::vector<std::string> log;
};

struct ChurnOptions {
    std::size_t population = 10000;
    std::size_t bloom_bits = 1u << 16;
    unsigned bloom_hashes = 4;
    double cheap_load = 0.4;        ///< load of the cheaper path at the interval start
    double previous_attempts = 0.0; ///< share of surviving flows trying to register mid-interval
};

/// One FLOSS interval with flow births and deaths. Each egress keeps a
/// Bloom filter of flows active in the previous interval; a mid-interval
/// registration is granted only when the lookup says "new".
ChurnResult flow_churn(double birth_rate, double death_rate, double interval_length, std::uint64_t seed,
                       const ChurnOptions& opt = {});

}  // namespace oscstab
