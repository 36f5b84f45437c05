#pragma once
#include <cstdint>
#include <limits>
#include <string_view>

// Counter-based random streams. Every stream is keyed by
// (master seed, purpose tag, index); the n-th draw is a pure function of
// the key and n, so the order in which workers run trials cannot change
// the numbers any trial sees.

namespace alloyloc {

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

class Stream {
public:
    using result_type = std::uint64_t;

    constexpr Stream(std::uint64_t master_seed, std::string_view tag, std::uint64_t index = 0) noexcept
        : key_(splitmix64(splitmix64(master_seed) ^ splitmix64(fnv1a(tag) + splitmix64(index)))) {}

    /// Derive an independent child stream (e.g. one per scale, then one per trial).
    [[nodiscard]] constexpr Stream child(std::string_view tag, std::uint64_t index) const noexcept {
        return Stream(key_, tag, index);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept { return splitmix64(key_ + (++counter_) * 0xd1b54a32d192ed03ULL); }

    /// Uniform on [0, 1) with 53 random bits.
    constexpr double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    constexpr std::uint64_t key() const noexcept { return key_; }
    constexpr std::uint64_t draws() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace alloyloc
