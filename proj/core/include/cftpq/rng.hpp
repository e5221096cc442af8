#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace cftpq {

/// One alpha draw, recorded when tracing is enabled (test instrumentation).
struct AlphaRecord {
    std::int64_t t;
    int substep;
    double value;
};

/// Counter-based random stream.  Every draw is a keyed hash of its own index,
/// so the stream has no mutable cursor: any past index can be evaluated in
/// any order, repeatedly, and always yields the same value.  This is what
/// lets a coupling-from-the-past loop extend further into the past while
/// provably reusing the randomness of earlier rounds.
///
/// alpha(t, substep) is the shared update variable for time step t (t < 0,
/// the past); substep addresses draws within one step (site index, plus one
/// slot for site selection).  uniform(counter) is a domain-separated side
/// channel for measurement sampling and schedule randomization so those
/// draws can never collide with the alphas.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : key_(mix(seed ^ kSeedDomain)) {}

    /// Uniform variate in [0,1) addressed by (t, substep); requires t < 0.
    double alpha(std::int64_t t, int substep) const {
        if (t >= 0)
            throw std::invalid_argument(
                "RngStream::alpha: time index must be negative (updates are indexed from the past)");
        double a = to_unit(word(kAlphaDomain, static_cast<std::uint64_t>(t),
                                static_cast<std::uint64_t>(substep)));
        if (trace_) trace_->push_back({t, substep, a});
        return a;
    }

    /// Uniform variate in [0,1) addressed by a plain counter.
    double uniform(std::uint64_t counter) const {
        return to_unit(word(kUniformDomain, counter, 0));
    }

    /// Independently keyed stream derived from this one.
    RngStream child(std::uint64_t tag) const {
        RngStream s(0);
        s.key_ = mix(key_ ^ mix(tag ^ kChildDomain));
        return s;
    }

    std::uint64_t key() const { return key_; }

    /// Route every subsequent alpha() into `sink` (nullptr disables).
    void set_trace(std::vector<AlphaRecord>* sink) const { trace_ = sink; }

private:
    static constexpr std::uint64_t kSeedDomain    = 0x9e3779b97f4a7c15ULL;
    static constexpr std::uint64_t kAlphaDomain   = 0xa55a1fb8c26e38d3ULL;
    static constexpr std::uint64_t kUniformDomain = 0x5ec1b1a7d3f08b27ULL;
    static constexpr std::uint64_t kChildDomain   = 0xc4ceb9fe1a85ec53ULL;

    // SplitMix64 finalizer: a cheap bijective 64-bit mixer with full
    // avalanche; two absorb rounds plus a final pass key the 128-bit index.
    static std::uint64_t mix(std::uint64_t x) {
        x ^= x >> 30;
        x *= 0xbf58476d1ce4e5b9ULL;
        x ^= x >> 27;
        x *= 0x94d049bb133111ebULL;
        x ^= x >> 31;
        return x;
    }

    std::uint64_t word(std::uint64_t domain, std::uint64_t a, std::uint64_t b) const {
        std::uint64_t h = key_ ^ domain;
        h = mix(h + 0x9e3779b97f4a7c15ULL * (a + 0x632be59bd9b4e019ULL));
        h = mix(h + 0xd1b54a32d192ed03ULL * (b + 0x9e6c63d0873d52a1ULL));
        return mix(h);
    }

    static double to_unit(std::uint64_t w) {
        return static_cast<double>(w >> 11) * 0x1.0p-53;
    }

    std::uint64_t key_;
    mutable std::vector<AlphaRecord>* trace_ = nullptr;
};

/// Sequential view over a stream: next() hands out uniform(0), uniform(1), ...
class UniformSequence {
public:
    explicit UniformSequence(RngStream stream) : stream_(stream) {}
    double next() { return stream_.uniform(counter_++); }
    std::uint64_t draws() const { return counter_; }

private:
    RngStream stream_;
    std::uint64_t counter_ = 0;
};

/// Stable per-task seed derivation (independent streams for sample i).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t x = base + 0x9e3779b97f4a7c15ULL * (index + 1);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

}  // namespace cftpq
