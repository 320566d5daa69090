#ifndef SINN_ENSEMBLE_HPP
#define SINN_ENSEMBLE_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sinn/errors.hpp"

namespace sinn {

// A batch of real-valued trajectories sampled on a uniform time grid.
// Storage is row-major (trajectory, time, component); dt is the time
// between stored samples. The universal currency between simulators,
// the generator and the estimators.
struct Ensemble {
    std::size_t batch = 0;
    std::size_t time = 0;
    std::size_t dim = 0;
    double dt = 1.0;
    std::vector<double> data;

    Ensemble() = default;
    Ensemble(std::size_t b, std::size_t t, std::size_t d, double dt_)
        : batch(b), time(t), dim(d), dt(dt_), data(b * t * d, 0.0) {
        if (b < 1 || t < 1 || d < 1)
            throw ShapeError("ensemble dimensions must be >= 1");
        if (!(dt_ > 0.0))
            throw ParameterError("ensemble dt must be > 0");
    }

    double& at(std::size_t i, std::size_t t, std::size_t k) {
        return data[(i * time + t) * dim + k];
    }
    double at(std::size_t i, std::size_t t, std::size_t k) const {
        return data[(i * time + t) * dim + k];
    }

    std::span<double> trajectory(std::size_t i) {
        return {data.data() + i * time * dim, time * dim};
    }
    std::span<const double> trajectory(std::size_t i) const {
        return {data.data() + i * time * dim, time * dim};
    }

    std::size_t size() const { return data.size(); }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    // Extract one state component as a 1-dim ensemble.
    Ensemble component(std::size_t k) const {
        if (k >= dim) throw ShapeError("component index out of range");
        Ensemble out(batch, time, 1, dt);
        for (std::size_t i = 0; i < batch; ++i)
            for (std::size_t t = 0; t < time; ++t)
                out.at(i, t, 0) = at(i, t, k);
        return out;
    }

    // First `count` trajectories.
    Ensemble head(std::size_t count) const {
        if (count < 1 || count > batch) throw ShapeError("head count out of range");
        Ensemble out(count, time, dim, dt);
        std::copy(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(count * time * dim),
                  out.data.begin());
        return out;
    }

    // Trajectories [first, first+count).
    Ensemble slice(std::size_t first, std::size_t count) const {
        if (count < 1 || first + count > batch) throw ShapeError("slice range out of range");
        Ensemble out(count, time, dim, dt);
        std::copy(data.begin() + static_cast<std::ptrdiff_t>(first * time * dim),
                  data.begin() + static_cast<std::ptrdiff_t>((first + count) * time * dim),
                  out.data.begin());
        return out;
    }

    // Elementwise square, used for squared-process statistics.
    Ensemble squared() const {
        Ensemble out = *this;
        for (double& v : out.data) v *= v;
        return out;
    }
};

// Keep samples at indices 0, stride, 2*stride, ...; output dt scales by stride.
inline Ensemble coarse_grain(const Ensemble& e, std::size_t stride) {
    if (stride == 0) throw ParameterError("coarse_grain stride must be >= 1");
    if (stride > e.time) throw ParameterError("coarse_grain stride exceeds time length");
    const std::size_t kept = (e.time - 1) / stride + 1;
    Ensemble out(e.batch, kept, e.dim, e.dt * static_cast<double>(stride));
    for (std::size_t i = 0; i < e.batch; ++i)
        for (std::size_t t = 0; t < kept; ++t)
            for (std::size_t k = 0; k < e.dim; ++k)
                out.at(i, t, k) = e.at(i, t * stride, k);
    return out;
}

} // namespace sinn

#endif
