#ifndef GFORMULA_RNG_HPP
#define GFORMULA_RNG_HPP

#include <cmath>
#include <cstdint>

namespace gformula {

// splitmix64 finalizer (Steele, Lea & Flood; Vigna's fixed-increment variant).
inline std::uint64_t splitmix64_mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * UINT64_C(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)) * UINT64_C(0x94D049BB133111EB);
    return z ^ (z >> 31);
}

// Derives the state of an independent stream from (seed, stream_id). Pure
// function, so parallel workers can derive their streams without sharing a
// generator: stream k of seed s is the same no matter who asks.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t stream_id) {
    const std::uint64_t golden = UINT64_C(0x9E3779B97F4A7C15);
    return splitmix64_mix(splitmix64_mix(seed + golden) + stream_id * golden);
}

// Small counter-style generator used everywhere randomness is needed.
// Deterministic given its seed; no global state; cheap to copy.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    static Rng stream(std::uint64_t seed, std::uint64_t stream_id) {
        return Rng(derive_stream(seed, stream_id));
    }

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += UINT64_C(0x9E3779B97F4A7C15));
        return splitmix64_mix(z);
    }

    // uniform on [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform on (0, 1]; safe as a log() argument
    double uniform_pos() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // standard normal via Box-Muller; two uniforms per draw, no cached spare,
    // so copies of the generator never diverge on hidden state
    double normal() {
        double u1 = uniform_pos();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    // uniform integer in [0, n); Lemire multiply-shift
    int uniform_int(int n) {
        return static_cast<int>(
            (static_cast<unsigned __int128>(next_u64()) * static_cast<std::uint64_t>(n)) >> 64);
    }

    bool bernoulli(double p) { return uniform() < p; }

    std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_;
};

} // namespace gformula

#endif
