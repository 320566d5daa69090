#ifndef SINN_SDE_HPP
#define SINN_SDE_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sinn/ensemble.hpp"
#include "sinn/errors.hpp"
#include "sinn/parallel.hpp"
#include "sinn/rng.hpp"

namespace sinn {

// dx = -theta x dt + sigma dW
struct Ou {
    double theta = 1.0;
    double sigma = 0.5;
};

// dq = p dt; dp = (-V'(q) - gamma p) dt + sigma dW,  V = alpha/2 q^2 + theta/4 q^4,
// sigma fixed by fluctuation-dissipation: sigma = sqrt(2 gamma / beta).
struct FpuLangevin {
    double alpha = 1.0;
    double theta = 1.0;
    double gamma = 1.0;
    double beta = 1.0;
};

// dx = -b x dt + pulse train; pulse count per step ~ Poisson(lambda dt),
// magnitudes i.i.d. Exponential(rate).
struct PoissonPulse {
    double b = 1.0;
    double lambda = 2.0;
    double rate = 1.0;
};

// N particles in non-canonical (r, p) coordinates with FPU bond potential and
// fixed walls q_0 = q_{N+1} = 0 (so the closing bond is r_{N+1} = -sum r_i).
struct Chain {
    std::size_t n_particles = 100;
    double alpha = 1.0;
    double theta = 1.0;
    double gamma = 1.0;
    double beta = 1.0;
};

// dx = p dt; dp = (-V'(x) - gamma p) dt + sigma dW,  V = V0 (1 - (x/x0)^2)^2.
struct DoubleWell {
    double v0 = 5.0;
    double x0 = 1.0;
    double gamma = 1.0;
    double beta = 1.0;
};

using SdeSystem = std::variant<Ou, FpuLangevin, PoissonPulse, Chain, DoubleWell>;

inline double fluctuation_dissipation_sigma(double gamma, double beta) {
    return std::sqrt(2.0 * gamma / beta);
}

inline double fpu_force(double alpha, double theta, double q) {
    return -(alpha * q + theta * q * q * q);
}

// -V'(x) for the double well, derived analytically from V.
inline double double_well_force(double v0, double x0, double x) {
    const double s = x / x0;
    return 4.0 * v0 * x * (1.0 - s * s) / (x0 * x0);
}

inline void validate(const SdeSystem& system) {
    std::visit(
        [](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Ou>) {
                if (!(s.theta > 0) || !(s.sigma > 0))
                    throw ParameterError("ou requires theta, sigma > 0");
            } else if constexpr (std::is_same_v<T, FpuLangevin>) {
                if (!(s.alpha > 0) || !(s.theta > 0) || !(s.beta > 0) || !(s.gamma >= 0))
                    throw ParameterError("fpu requires alpha, theta, beta > 0 and gamma >= 0");
            } else if constexpr (std::is_same_v<T, PoissonPulse>) {
                if (!(s.b > 0) || !(s.lambda > 0) || !(s.rate > 0))
                    throw ParameterError("poisson-pulse requires b, lambda, rate > 0");
            } else if constexpr (std::is_same_v<T, Chain>) {
                if (s.n_particles < 2) throw ParameterError("chain requires N >= 2");
                if (!(s.alpha > 0) || !(s.theta > 0) || !(s.beta > 0) || !(s.gamma >= 0))
                    throw ParameterError("chain requires alpha, theta, beta > 0 and gamma >= 0");
            } else if constexpr (std::is_same_v<T, DoubleWell>) {
                if (!(s.v0 > 0) || !(s.x0 > 0) || !(s.beta > 0) || !(s.gamma >= 0))
                    throw ParameterError("double-well requires v0, x0, beta > 0 and gamma >= 0");
            }
        },
        system);
}

inline std::size_t state_dim(const SdeSystem& system) {
    return std::visit(
        [](const auto& s) -> std::size_t {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Ou>) return 1;
            if constexpr (std::is_same_v<T, FpuLangevin>) return 2;
            if constexpr (std::is_same_v<T, PoissonPulse>) return 1;
            if constexpr (std::is_same_v<T, Chain>) return 2 * s.n_particles;
            if constexpr (std::is_same_v<T, DoubleWell>) return 2;
        },
        system);
}

inline std::size_t noise_dim(const SdeSystem& system) {
    return std::visit(
        [](const auto& s) -> std::size_t {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Chain>) return s.n_particles;
            (void)s;
            return 1;
        },
        system);
}

// One Euler-Maruyama step X + dt b(X) + sigma(X) sqrt(dt) xi for the
// diffusion-driven variants. PoissonPulse has its own step rule below.
inline void em_step(const SdeSystem& system, std::span<const double> state, double dt,
                    std::span<const double> noise, std::span<double> out) {
    if (!(dt > 0)) throw ParameterError("em_step dt must be > 0");
    if (state.size() != state_dim(system) || out.size() != state.size())
        throw ShapeError("em_step state dimension mismatch");
    if (noise.size() != noise_dim(system)) throw ShapeError("em_step noise dimension mismatch");
    const double sdt = std::sqrt(dt);

    if (const auto* s = std::get_if<Ou>(&system)) {
        out[0] = state[0] - s->theta * state[0] * dt + s->sigma * sdt * noise[0];
        return;
    }
    if (const auto* s = std::get_if<FpuLangevin>(&system)) {
        const double sig = fluctuation_dissipation_sigma(s->gamma, s->beta);
        const double q = state[0], p = state[1];
        out[0] = q + p * dt;
        out[1] = p + (fpu_force(s->alpha, s->theta, q) - s->gamma * p) * dt + sig * sdt * noise[0];
        return;
    }
    if (const auto* s = std::get_if<DoubleWell>(&system)) {
        const double sig = fluctuation_dissipation_sigma(s->gamma, s->beta);
        const double x = state[0], p = state[1];
        out[0] = x + p * dt;
        out[1] = p + (double_well_force(s->v0, s->x0, x) - s->gamma * p) * dt + sig * sdt * noise[0];
        return;
    }
    if (const auto* s = std::get_if<Chain>(&system)) {
        const std::size_t n = s->n_particles;
        const double sig = fluctuation_dissipation_sigma(s->gamma, s->beta);
        const auto r = state.subspan(0, n);
        const auto p = state.subspan(n, n);
        double r_sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) r_sum += r[j];
        const double r_close = -r_sum; // bond to the fixed right wall
        auto vprime = [&](double rj) { return s->alpha * rj + s->theta * rj * rj * rj; };
        for (std::size_t j = 0; j < n; ++j) {
            const double p_prev = (j == 0) ? 0.0 : p[j - 1];
            out[j] = r[j] + (p[j] - p_prev) * dt;
            const double r_next = (j + 1 < n) ? r[j + 1] : r_close;
            out[n + j] = p[j] + (vprime(r_next) - vprime(r[j]) - s->gamma * p[j]) * dt +
                         sig * sdt * noise[j];
        }
        return;
    }
    throw ParameterError("em_step does not apply to poisson-pulse; use poisson_step");
}

// First-order scheme for the Poisson-pulse SDE: decay update, then add the
// K ~ Poisson(lambda dt) pulse magnitudes drawn Exponential(rate). Preserves
// x >= 0 whenever b dt <= 1.
inline double poisson_step(double b, double lambda, double rate, double x, double dt,
                           Xoshiro256& g) {
    if (!(dt > 0)) throw ParameterError("poisson_step dt must be > 0");
    if (!std::isfinite(x)) throw NumericError("poisson_step state not finite");
    if (b * dt > 1.0) throw StabilityError("poisson_step requires b*dt <= 1");
    double next = x - b * x * dt;
    const std::uint64_t k = g.poisson(lambda * dt);
    for (std::uint64_t j = 0; j < k; ++j) next += g.exponential(rate);
    return next;
}

struct SimulateOptions {
    // Fine steps integrated before the first stored sample; the default is
    // 10^4 for the systems whose equilibrium law is not sampled directly.
    std::optional<std::size_t> burn_in;
    // Fixed initial state for every trajectory (tests); replaces the built-in
    // equilibrium initialization.
    std::optional<std::vector<double>> initial_state;
    // Zero out the diffusion term (drift-only integration, tests).
    bool disable_noise = false;
    // Keep every k-th integration step. Equivalent to coarse-graining the
    // fully stored trajectory with the same stride, without holding it in
    // memory; the output dt scales accordingly.
    std::size_t store_stride = 1;
};

namespace detail {

inline std::size_t default_burn_in(const SdeSystem& system) {
    if (std::holds_alternative<Ou>(system)) return 0; // starts from the exact law
    return 10000;
}

inline void default_init(const SdeSystem& system, Xoshiro256& g, std::vector<double>& state) {
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Ou>) {
                state[0] = std::sqrt(s.sigma * s.sigma / (2.0 * s.theta)) * g.gaussian();
            } else if constexpr (std::is_same_v<T, DoubleWell>) {
                state[0] = g.uniform01() < 0.5 ? -s.x0 : s.x0;
                state[1] = 0.0;
            } else {
                (void)s;
                std::fill(state.begin(), state.end(), 0.0);
            }
        },
        system);
}

} // namespace detail

// Integrate `batch` independent trajectories and store `steps` samples per
// trajectory (the initial state plus steps-1 update results). Trajectory i
// draws from derive_stream(seed, i), so batched and one-at-a-time runs agree.
inline Ensemble simulate(const SdeSystem& system, double dt, std::size_t steps,
                         std::size_t batch, std::uint64_t seed,
                         const SimulateOptions& options = {}) {
    validate(system);
    if (steps < 1) throw ParameterError("simulate requires steps >= 1");
    if (batch < 1) throw ParameterError("simulate requires batch >= 1");
    if (!(dt > 0)) throw ParameterError("simulate dt must be > 0");
    const std::size_t dim = state_dim(system);
    const std::size_t ndim = noise_dim(system);
    if (options.initial_state && options.initial_state->size() != dim)
        throw ShapeError("simulate initial state dimension mismatch");
    const std::size_t burn = options.burn_in.value_or(detail::default_burn_in(system));
    const std::size_t stride = options.store_stride < 1 ? 1 : options.store_stride;
    const auto* pp = std::get_if<PoissonPulse>(&system);

    Ensemble out(batch, steps, dim, dt * static_cast<double>(stride));
    std::vector<std::string> failure(batch);

    parallel_for(batch, [&](std::size_t i) {
        Xoshiro256 g(derive_stream(seed, i));
        std::vector<double> state(dim), next(dim), noise(ndim);
        if (options.initial_state)
            state = *options.initial_state;
        else
            detail::default_init(system, g, state);

        auto advance = [&](std::size_t step_index) {
            if (pp) {
                next[0] = options.disable_noise ? state[0] - pp->b * state[0] * dt
                                                : poisson_step(pp->b, pp->lambda, pp->rate,
                                                               state[0], dt, g);
            } else {
                if (options.disable_noise)
                    std::fill(noise.begin(), noise.end(), 0.0);
                else
                    for (auto& v : noise) v = g.gaussian();
                em_step(system, state, dt, noise, next);
            }
            state.swap(next);
            for (double v : state)
                if (!std::isfinite(v)) {
                    failure[i] = "trajectory " + std::to_string(i) + " diverged at step " +
                                 std::to_string(step_index);
                    return false;
                }
            return true;
        };

        for (std::size_t b = 0; b < burn; ++b)
            if (!advance(b)) return;
        for (std::size_t k = 0; k < dim; ++k) out.at(i, 0, k) = state[k];
        for (std::size_t t = 1; t < steps; ++t) {
            for (std::size_t s = 0; s < stride; ++s)
                if (!advance(burn + (t - 1) * stride + s)) return;
            for (std::size_t k = 0; k < dim; ++k) out.at(i, t, k) = state[k];
        }
    });

    for (const auto& f : failure)
        if (!f.empty()) throw DivergenceError(f);
    return out;
}

// Coarse-grained observable of the particle chain: Q = sum_{i<N/2} r_i + r_{N/2}/2,
// the center-of-mass position of the middle coarse particle.
inline Ensemble chain_observable(const Ensemble& chain_ensemble, std::size_t n_particles) {
    if (n_particles < 2 || n_particles % 2 != 0)
        throw ParameterError("chain_observable requires even N >= 2");
    if (chain_ensemble.dim != 2 * n_particles)
        throw ShapeError("chain ensemble width does not match 2N");
    const std::size_t half = n_particles / 2;
    Ensemble out(chain_ensemble.batch, chain_ensemble.time, 1, chain_ensemble.dt);
    for (std::size_t i = 0; i < chain_ensemble.batch; ++i)
        for (std::size_t t = 0; t < chain_ensemble.time; ++t) {
            double q = 0.0;
            for (std::size_t j = 0; j + 1 < half; ++j) q += chain_ensemble.at(i, t, j);
            q += 0.5 * chain_ensemble.at(i, t, half - 1);
            out.at(i, t, 0) = q;
        }
    return out;
}

} // namespace sinn

#endif
