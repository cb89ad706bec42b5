#pragma once

#include "treevar/types.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace treevar {

/// Seeded random source with platform-stable output.
///
/// The engine is std::mt19937_64, whose sequence is pinned by the standard;
/// all derived draws below avoid the implementation-defined standard
/// distributions so that equal seeds give equal bytes everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % n;
    }

    int uniform_int(int lo, int hi) { // inclusive bounds
        return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    /// Standard normal via the polar (Marsaglia) method.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01() - 1.0;
            v = 2.0 * uniform01() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

    RowVectord gaussian_row(Index dim) {
        RowVectord v(dim);
        for (Index i = 0; i < dim; ++i) v[i] = normal();
        return v;
    }

    /// Uniform direction on the unit sphere in R^dim.
    RowVectord unit_row(Index dim) {
        RowVectord v = gaussian_row(dim);
        double n = v.norm();
        while (n < 1e-12) {
            v = gaussian_row(dim);
            n = v.norm();
        }
        return v / n;
    }

    /// Decorrelated child seed for sub-streams (splitmix64 finalizer).
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace treevar
