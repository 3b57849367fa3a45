#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace iris {

/// Deterministic random source. The engine is std::mt19937 (whose sequence is
/// pinned by the standard) and the distributions are implemented here rather
/// than taken from <random>, so streams are reproducible across standard
/// library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed)
        : eng_(static_cast<std::uint32_t>(seed ^ (seed >> 32))) {}

    std::uint32_t next_u32() { return eng_(); }

    /// Uniform in [0, 1).
    double uniform() { return next_u32() * (1.0 / 4294967296.0); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi], inclusive.
    int uniform_int(int lo, int hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi) - lo + 1;
        return lo + static_cast<int>((static_cast<std::uint64_t>(next_u32()) * span) >> 32);
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 1e-12) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Fisher-Yates shuffle.
    template <typename It>
    void shuffle(It first, It last) {
        const auto n = last - first;
        for (auto i = n - 1; i > 0; --i) {
            const int j = uniform_int(0, static_cast<int>(i));
            std::swap(first[i], first[j]);
        }
    }

private:
    std::mt19937 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace iris
