#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace lfmm {

/// Seedable random stream owned by one chain. Every stochastic step draws from
/// this single stream in a fixed order, which is what makes runs reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Derive an independent stream for chain `index` from a master seed
    /// (splitmix64 scramble, so nearby seeds do not collide).
    static std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
        std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (index + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    double uniform() {
        // 53-bit mantissa in [0,1).
        return (engine_() >> 11) * 0x1.0p-53;
    }

    double normal(double mean = 0.0, double sd = 1.0) {
        std::normal_distribution<double> d(mean, sd);
        return d(engine_);
    }

    /// Gamma with given shape and SCALE (mean = shape*scale).
    double gamma(double shape, double scale) {
        std::gamma_distribution<double> d(shape, scale);
        double x = d(engine_);
        // Tiny shapes can underflow to exactly zero; keep draws positive.
        return x > 1e-300 ? x : 1e-300;
    }

    /// Inverse gamma with shape a and rate b: density ~ x^{-a-1} exp(-b/x).
    double inv_gamma(double shape, double rate) {
        return 1.0 / gamma(shape, 1.0 / rate);
    }

    /// Dirichlet draw; `conc` entries must be positive.
    std::vector<double> dirichlet(const std::vector<double>& conc) {
        std::vector<double> g(conc.size());
        double sum = 0.0;
        for (std::size_t i = 0; i < conc.size(); ++i) {
            g[i] = gamma(conc[i], 1.0);
            sum += g[i];
        }
        for (double& v : g) v /= sum;
        return g;
    }

    /// Uniform integer in {0, ..., n-1}.
    std::uint64_t uniform_int(std::uint64_t n) {
        std::uniform_int_distribution<std::uint64_t> d(0, n - 1);
        return d(engine_);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace lfmm
