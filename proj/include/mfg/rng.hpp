#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace mfg {

// Stateless counter-based RNG. Every draw is a pure function of
// (seed, purpose, a, b, c, sub), so simulations produce bit-identical
// results no matter how realizations are scheduled across threads.
// Mixing is the splitmix64 finalizer chained over the key words.
namespace rng {

enum class Purpose : std::uint64_t {
    init_state = 1,
    brownian = 2,
    noise_amplitude = 3,
    noise_frequency = 4,
};

inline std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t key(std::uint64_t seed, Purpose purpose, std::uint64_t a, std::uint64_t b,
                         std::uint64_t c, std::uint64_t sub) {
    std::uint64_t h = mix(seed);
    h = mix(h ^ static_cast<std::uint64_t>(purpose));
    h = mix(h ^ a);
    h = mix(h ^ b);
    h = mix(h ^ c);
    h = mix(h ^ sub);
    return h;
}

// uniform on [0, 1)
inline double uniform(std::uint64_t seed, Purpose purpose, std::uint64_t a, std::uint64_t b,
                      std::uint64_t c, std::uint64_t sub) {
    return static_cast<double>(key(seed, purpose, a, b, c, sub) >> 11) * 0x1.0p-53;
}

inline double uniform_in(double lo, double hi, std::uint64_t seed, Purpose purpose, std::uint64_t a,
                         std::uint64_t b, std::uint64_t c, std::uint64_t sub) {
    return lo + (hi - lo) * uniform(seed, purpose, a, b, c, sub);
}

// standard normal via Box-Muller on two sub-draws (no cached mate: keeping it
// stateless is what makes the parallel/serial schedules agree bitwise)
inline double gaussian(std::uint64_t seed, Purpose purpose, std::uint64_t a, std::uint64_t b,
                       std::uint64_t c, std::uint64_t sub) {
    const double u1 = 1.0 - uniform(seed, purpose, a, b, c, 2 * sub);      // (0, 1]
    const double u2 = uniform(seed, purpose, a, b, c, 2 * sub + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// both Box-Muller outputs of the same two sub-draws; g0 equals gaussian(...)
// with the same sub, g1 is the orthogonal mate (one log/sqrt for two normals)
inline void gaussian_pair(std::uint64_t seed, Purpose purpose, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c, std::uint64_t sub, double& g0, double& g1) {
    const double u1 = 1.0 - uniform(seed, purpose, a, b, c, 2 * sub);
    const double u2 = uniform(seed, purpose, a, b, c, 2 * sub + 1);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double phase = 2.0 * std::numbers::pi * u2;
    g0 = radius * std::cos(phase);
    g1 = radius * std::sin(phase);
}

}  // namespace rng
}  // namespace mfg
