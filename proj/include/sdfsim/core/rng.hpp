#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "sdfsim/core/types.hpp"

namespace sdfsim {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Deterministic PRNG with explicit distributions. The standard library's
// distribution objects are implementation-defined, so all sampling used for
// reproducible artifacts goes through this type instead.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(splitmix64(seed ^ 0x5851f42d4c957f2dull)) {}

    // Independent child stream, e.g. one per trajectory or worker.
    Rng child(std::uint64_t stream) const {
        return Rng(splitmix64(state_ ^ splitmix64(stream + 0x9e3779b97f4a7c15ull)));
    }

    std::uint64_t next_u64() {
        state_ = splitmix64(state_);
        return state_;
    }

    // Uniform in [0, 1).
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t uniform_index(std::uint64_t n) {
        // Multiply-shift; bias is negligible for n << 2^64.
        return std::uint64_t((__uint128_t(next_u64()) * n) >> 64);
    }

    // Box-Muller without caching so the draw sequence is easy to reason about.
    double normal() {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    Vec3 normal3(double sigma) { return Vec3(normal() * sigma, normal() * sigma, normal() * sigma); }

    Vec3 uniform_in_box(const Vec3& lo, const Vec3& hi) {
        return Vec3(uniform(lo.x(), hi.x()), uniform(lo.y(), hi.y()), uniform(lo.z(), hi.z()));
    }

    Vec3 unit_vector() {
        // Marsaglia rejection on the unit ball.
        for (;;) {
            Vec3 v(uniform(-1, 1), uniform(-1, 1), uniform(-1, 1));
            double n2 = v.squaredNorm();
            if (n2 > 1e-12 && n2 <= 1.0) return v / std::sqrt(n2);
        }
    }

    Quat random_rotation() {
        // Shoemake's method: uniform over SO(3).
        double u1 = uniform(), u2 = uniform(), u3 = uniform();
        double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
        double t1 = 2.0 * std::numbers::pi * u2, t2 = 2.0 * std::numbers::pi * u3;
        return Quat(a * std::sin(t1), a * std::cos(t1), b * std::sin(t2), b * std::cos(t2)).normalized();
    }

private:
    std::uint64_t state_;
};

}  // namespace sdfsim
