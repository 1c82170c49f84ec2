#include <cmath>

#include "oscstab/agent_sim.hpp"
#include "oscstab/errors.hpp"
#include "oscstab/hash.hpp"

namespace oscstab {

std::uint64_t flow_id(std::uint64_t src, std::uint64_t dst) { return TupleHash(0x464c4f57ULL).add(src).add(dst).value(); }

bool selective_admission(std::uint64_t flow, double interval_start, double rho)
{
    if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("rho must lie in [0, 1]");
    return TupleHash(0x41444d4954ULL).add(interval_start).add(flow).unit() < rho;
}

BloomFilter::BloomFilter(std::size_t bits, unsigned hashes, std::uint64_t seed)
    : bits_(bits), k_(hashes), seed_(seed), words_((bits + 63) / 64, 0)
{
    if (bits == 0 || hashes == 0) throw DomainError("Bloom filter needs m > 0 and k > 0");
}

namespace {

struct Probe {
    std::uint64_t h1, h2;
};

Probe probe(std::uint64_t key, std::uint64_t seed)
{
    const std::uint64_t h1 = mix64(key ^ mix64(seed));
    return {h1, mix64(h1 ^ 0x2545f4914f6cdd1dULL) | 1};
}

}  // namespace

void BloomFilter::insert(std::uint64_t key)
{
    const auto p = probe(key, seed_);
    for (unsigned i = 0; i < k_; ++i) {
        const std::uint64_t bit = (p.h1 + i * p.h2) % bits_;
        words_[bit / 64] |= std::uint64_t{1} << (bit % 64);
    }
    ++n_;
}

bool BloomFilter::contains(std::uint64_t key) const
{
    const auto p = probe(key, seed_);
    for (unsigned i = 0; i < k_; ++i) {
        const std::uint64_t bit = (p.h1 + i * p.h2) % bits_;
        if (!(words_[bit / 64] >> (bit % 64) & 1)) return false;
    }
    return true;
}

void BloomFilter::clear()
{
    std::fill(words_.begin(), words_.end(), 0);
    n_ = 0;
}

double BloomFilter::analytic_fp_rate() const
{
    const double k = k_;
    return std::pow(1.0 - std::exp(-k * static_cast<double>(n_) / static_cast<double>(bits_)), k);
}

void EventQueue::push(double time, EventKind kind, std::size_t flow) { heap_.push({time, seq_++, kind, flow}); }

Event EventQueue::pop()
{
    Event e = heap_.top();
    heap_.pop();
    return e;
}

}  // namespace oscstab
