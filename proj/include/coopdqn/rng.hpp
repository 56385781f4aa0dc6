#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace coopdqn {

/// One round of the splitmix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Mixes a base seed with a list of indices into a new 64-bit seed.
///
/// h0 = splitmix64(base); for each index v: h = splitmix64(h ^ splitmix64(v + 1)).
/// The final value is h = splitmix64(h ^ splitmix64(seed_index + 1) ^ 0x5EED).
/// Every step is a bijection of h for fixed input, so distinct tuples collide
/// only by chance (~2^-64 per pair).
inline std::uint64_t derive_seed(std::uint64_t base_seed, std::span<const std::uint64_t> axis_indices,
                                 std::uint64_t seed_index) noexcept {
    std::uint64_t h = splitmix64(base_seed);
    for (auto v : axis_indices) h = splitmix64(h ^ splitmix64(v + 1));
    return splitmix64(h ^ splitmix64(seed_index + 1) ^ 0x5EEDULL);
}

inline std::uint64_t derive_seed(std::uint64_t base_seed, std::initializer_list<std::uint64_t> axis_indices,
                                 std::uint64_t seed_index) noexcept {
    return derive_seed(base_seed, std::span<const std::uint64_t>(axis_indices.begin(), axis_indices.size()),
                       seed_index);
}

/// Named sub-streams of a run seed, so that one consumer drawing more numbers
/// never shifts what another consumer sees.
enum class Stream : std::uint64_t {
    Topology = 1,
    Groups,
    Init,
    InitialActions,
    Actions,
    Replay,
    ActivationSample,
    Clustering,
};

inline std::uint64_t stream_seed(std::uint64_t run_seed, Stream s, std::uint64_t sub = 0) noexcept {
    return derive_seed(run_seed, {static_cast<std::uint64_t>(s), sub}, 0);
}

/// Portable random source. The standard distributions are implementation
/// defined, so every draw here is built directly from engine output.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Unbiased integer in [0, n), n > 0 (Lemire's multiply-shift with rejection).
    std::uint64_t index(std::uint64_t n) {
        std::uint64_t x = engine_();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                x = engine_();
                m = static_cast<__uint128_t>(x) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    bool bernoulli(double p) { return uniform01() < p; }

    template <typename It>
    void shuffle(It first, It last) {
        const auto n = static_cast<std::uint64_t>(last - first);
        for (std::uint64_t i = n; i > 1; --i) {
            const auto j = index(i);
            using std::swap;
            swap(first[i - 1], first[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace coopdqn
