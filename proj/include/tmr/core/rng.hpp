#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace tmr {

/// Deterministic splitmix64 generator. All randomness in the project flows
/// through this class so that seeded runs are reproducible bit-for-bit,
/// independent of the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    /// Independent stream derived from (seed, stream index). Workers in a
    /// parallel map each own child(seed, index).
    static Rng child(uint64_t seed, uint64_t stream) {
        Rng r(seed ^ (0x9E3779B97F4A7C15ULL * (stream + 0x632BE59BD9B4E019ULL)));
        r.next();
        r.next();
        return r;
    }

    uint64_t next() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Uniform integer in [a, b], inclusive.
    int64_t uniform_int(int64_t a, int64_t b) {
        uint64_t span = uint64_t(b - a) + 1;
        return a + int64_t(next() % span);
    }

    bool bernoulli(double p) { return uniform() < p; }

    double normal(double mu = 0.0, double sigma = 1.0) {
        if (have_spare_) {
            have_spare_ = false;
            return mu + sigma * spare_;
        }
        double u1 = 0.0;
        while (u1 <= 1e-300) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return mu + sigma * r * std::cos(theta);
    }

    template <typename T>
    const T& choice(const std::vector<T>& v) {
        return v[size_t(next() % v.size())];
    }

    /// Fisher-Yates; does not use std::shuffle (unspecified ordering).
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[size_t(next() % i)]);
        }
    }

private:
    uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace tmr
