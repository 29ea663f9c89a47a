#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace esb {

// SplitMix64 step; used to derive well-separated substream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seeded random stream. Gaussian draws use Box-Muller rather than
// std::normal_distribution so the byte stream is identical across
// standard-library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Substream `index` of a master seed; fixed derivation scheme shared by
    // every component so that episodes are reproducible.
    static Rng stream(std::uint64_t master, std::uint64_t index) {
        std::uint64_t s = master ^ (0x51a7bb3c62d5bd1fULL * (index + 1));
        return Rng(splitmix64(s));
    }

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on [0, 1).
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Uniform on {0, ..., n-1}, rejection sampled to avoid modulo bias.
    int uniform_int(int n) {
        const std::uint64_t un = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return static_cast<int>(x % un);
    }

    // Standard normal via Box-Muller; draws are cached in pairs.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    Eigen::VectorXd gaussian_vector(int d) {
        Eigen::VectorXd v(d);
        for (int i = 0; i < d; ++i) v[i] = normal();
        return v;
    }

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace esb
