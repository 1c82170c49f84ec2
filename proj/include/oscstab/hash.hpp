#pragma once

#include <bit>
#include <cstdint>

namespace oscstab {

/// splitmix64 finalizer; a fixed 64-bit avalanche mixer.
constexpr std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Chains fields through mix64 in order.
class TupleHash {
public:
    constexpr explicit TupleHash(std::uint64_t domain = 0) : h_(mix64(domain)) {}
    constexpr TupleHash& add(std::uint64_t v)
    {
        h_ = mix64(h_ ^ mix64(v));
        return *this;
    }
    TupleHash& add(double v) { return add(std::bit_cast<std::uint64_t>(v)); }
    constexpr std::uint64_t value() const { return h_; }
    /// Uniform in [0, 1) with 53 bits.
    constexpr double unit() const { return static_cast<double>(h_ >> 11) * 0x1.0p-53; }

private:
    std::uint64_t h_;
};

}  // namespace oscstab
