#ifndef SINN_RNG_HPP
#define SINN_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>

#include "sinn/ensemble.hpp"
#include "sinn/errors.hpp"

namespace sinn {

// SplitMix64; used for seeding and for deriving sub-stream seeds.
struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t s) : state(s) {}
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

// Sub-stream derivation rule: stream k of a seed is keyed by
// seed + (k+1) * golden ratio and scrambled through one SplitMix64 draw.
// Trajectory i of sample_noise uses derive_stream(seed, i), so results are
// identical whether trajectories are filled serially or in parallel.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t k) {
    return SplitMix64(seed + (k + 1) * 0x9E3779B97F4A7C15ULL).next();
}

// xoshiro256** (Blackman & Vigna), seeded through SplitMix64.
class Xoshiro256 {
public:
    explicit Xoshiro256(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& w : s_) w = sm.next();
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1); never returns an exact endpoint.
    double uniform_open01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Standard normal via the basic Box-Muller transform (rejection-free).
    // Each pair of uniforms yields two deviates; the second is cached, so a
    // fixed request sequence consumes a fixed number of raw draws.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Exponential with the given rate; strictly positive.
    double exponential(double rate) { return -std::log(uniform_open01()) / rate; }

    // Poisson count by CDF inversion; consumes exactly one uniform.
    std::uint64_t poisson(double mean) {
        const double u = uniform01();
        double p = std::exp(-mean);
        double cdf = p;
        std::uint64_t k = 0;
        while (u >= cdf) {
            ++k;
            p *= mean / static_cast<double>(k);
            cdf += p;
            if (p < 1e-300 && k > mean) break;
        }
        return k;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// I.i.d. input distribution for simulator driving terms and generator inputs.
struct NoiseSpec {
    enum class Kind { Gaussian, Uniform, Exponential };

    Kind kind = Kind::Gaussian;
    double a = 0.0; // mean | lo | rate
    double b = 1.0; // std  | hi | unused
    std::uint64_t seed = 0;

    static NoiseSpec gaussian(double mean, double std, std::uint64_t seed) {
        NoiseSpec s{Kind::Gaussian, mean, std, seed};
        s.validate();
        return s;
    }
    static NoiseSpec uniform(double lo, double hi, std::uint64_t seed) {
        NoiseSpec s{Kind::Uniform, lo, hi, seed};
        s.validate();
        return s;
    }
    static NoiseSpec exponential(double rate, std::uint64_t seed) {
        NoiseSpec s{Kind::Exponential, rate, 0.0, seed};
        s.validate();
        return s;
    }

    void validate() const {
        switch (kind) {
        case Kind::Gaussian:
            if (!(b >= 0.0)) throw ParameterError("gaussian std must be >= 0");
            break;
        case Kind::Uniform:
            if (!(b > a)) throw ParameterError("uniform bounds need hi > lo");
            break;
        case Kind::Exponential:
            if (!(a > 0.0)) throw ParameterError("exponential rate must be > 0");
            break;
        }
    }

    double draw(Xoshiro256& g) const {
        switch (kind) {
        case Kind::Gaussian: return a + b * g.gaussian();
        case Kind::Uniform: return g.uniform(a, b);
        case Kind::Exponential: return g.exponential(a);
        }
        return 0.0;
    }

    NoiseSpec with_seed(std::uint64_t s) const {
        NoiseSpec out = *this;
        out.seed = s;
        return out;
    }
};

// batch x steps x dim array of i.i.d. draws. Entry order within a trajectory
// is (t, k) row-major from that trajectory's sub-stream.
inline Ensemble sample_noise(const NoiseSpec& spec, std::size_t batch, std::size_t steps,
                             std::size_t dim) {
    spec.validate();
    if (batch < 1 || steps < 1 || dim < 1)
        throw ParameterError("sample_noise requires batch, steps, dim >= 1");
    Ensemble out(batch, steps, dim, 1.0);
    for (std::size_t i = 0; i < batch; ++i) {
        Xoshiro256 g(derive_stream(spec.seed, i));
        auto traj = out.trajectory(i);
        for (std::size_t j = 0; j < traj.size(); ++j) traj[j] = spec.draw(g);
    }
    return out;
}

} // namespace sinn

#endif
