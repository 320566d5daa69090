#ifndef SINN_STATS_HPP
#define SINN_STATS_HPP

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "sinn/ensemble.hpp"
#include "sinn/errors.hpp"
#include "sinn/fft.hpp"

namespace sinn {

// Normalized autocorrelation estimate: values[j] is ACF at lags[j],
// with ACF(0) == 1 and dt the time per lag unit.
struct AcfCurve {
    std::vector<std::size_t> lags;
    std::vector<double> values;
    double dt = 1.0;
};

// Kernel density estimate on an ascending evaluation grid.
struct PdfEstimate {
    std::vector<double> grid;
    std::vector<double> density;
    double bandwidth = 1.0;
};

namespace detail {

inline void check_acf_input(const Ensemble& e, std::size_t max_lag) {
    if (e.dim != 1) throw ShapeError("acf expects a 1-dim ensemble");
    if (e.time < 2) throw InsufficientDataError("acf needs time length >= 2");
    if (max_lag >= e.time) throw ParameterError("acf max_lag must be < time length");
}

inline double global_mean(const Ensemble& e) {
    double s = 0.0;
    for (double v : e.data) s += v;
    return s / static_cast<double>(e.data.size());
}

inline AcfCurve normalize_acf(std::vector<double> sums, const Ensemble& e, std::size_t max_lag) {
    const double n_traj = static_cast<double>(e.batch);
    const double n = static_cast<double>(e.time);
    for (std::size_t tau = 0; tau <= max_lag; ++tau)
        sums[tau] /= n_traj * (n - static_cast<double>(tau));
    if (sums[0] == 0.0)
        throw DegenerateError("acf normalization is degenerate (zero-variance signal)");
    AcfCurve out;
    out.dt = e.dt;
    out.lags.resize(max_lag + 1);
    out.values.resize(max_lag + 1);
    for (std::size_t tau = 0; tau <= max_lag; ++tau) {
        out.lags[tau] = tau;
        out.values[tau] = sums[tau] / sums[0];
    }
    return out;
}

} // namespace detail

// Direct estimator: subtract the global mean, average X_t X_{t+tau} over all
// trajectories and valid t, normalize by the lag-0 value. O(n*max_lag) per
// trajectory.
inline AcfCurve acf_brute(const Ensemble& e, std::size_t max_lag) {
    detail::check_acf_input(e, max_lag);
    const double mean = detail::global_mean(e);
    const std::size_t n = e.time;
    std::vector<double> sums(max_lag + 1, 0.0);
    std::vector<double> centered(n);
    for (std::size_t i = 0; i < e.batch; ++i) {
        const auto traj = e.trajectory(i);
        for (std::size_t t = 0; t < n; ++t) centered[t] = traj[t] - mean;
        for (std::size_t tau = 0; tau <= max_lag; ++tau) {
            double s = 0.0;
            for (std::size_t t = 0; t + tau < n; ++t) s += centered[t] * centered[t + tau];
            sums[tau] += s;
        }
    }
    return detail::normalize_acf(std::move(sums), e, max_lag);
}

// Wiener-Khinchin estimator: per trajectory, zero-pad the centered signal to
// the next power of two >= 2n (linear, not circular, correlation), transform,
// multiply by the conjugate, invert. Same normalization as acf_brute; the two
// agree to ~1e-12 of the ACF unit scale.
inline AcfCurve acf_fft(const Ensemble& e, std::size_t max_lag) {
    detail::check_acf_input(e, max_lag);
    const double mean = detail::global_mean(e);
    const std::size_t n = e.time;
    const std::size_t m = next_pow2(2 * n);
    std::vector<double> sums(max_lag + 1, 0.0);
    std::vector<std::complex<double>> buf(m);
    for (std::size_t i = 0; i < e.batch; ++i) {
        const auto traj = e.trajectory(i);
        for (std::size_t t = 0; t < n; ++t) buf[t] = std::complex<double>(traj[t] - mean, 0.0);
        std::fill(buf.begin() + static_cast<std::ptrdiff_t>(n), buf.end(),
                  std::complex<double>(0.0, 0.0));
        fft_radix2(buf, false);
        for (auto& z : buf) z *= std::conj(z);
        fft_radix2(buf, true);
        for (std::size_t tau = 0; tau <= max_lag; ++tau) sums[tau] += buf[tau].real();
    }
    return detail::normalize_acf(std::move(sums), e, max_lag);
}

// 100 uniform evaluation points spanning the samples extended by three
// bandwidths each side; reused for generated data so pdf losses compare
// identical grids.
inline std::vector<double> kde_grid(const std::vector<double>& samples,
                                    std::size_t points = 100) {
    if (samples.empty()) throw ParameterError("kde grid needs samples");
    if (points < 2) throw ParameterError("kde grid needs >= 2 points");
    const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
    const double h = std::pow(static_cast<double>(samples.size()), -0.2);
    const double lo = *mn - 3.0 * h;
    const double hi = *mx + 3.0 * h;
    std::vector<double> grid(points);
    const double step = (hi - lo) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) grid[i] = lo + step * static_cast<double>(i);
    return grid;
}

// Gaussian-kernel density estimate with an explicit bandwidth.
inline PdfEstimate kde_with_bandwidth(const std::vector<double>& samples,
                                      const std::vector<double>& grid, double h) {
    if (samples.empty()) throw ParameterError("kde needs at least one sample");
    if (grid.empty()) throw ParameterError("kde needs a nonempty grid");
    if (!(h > 0)) throw ParameterError("kde bandwidth must be > 0");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw ParameterError("kde grid must be ascending");

    PdfEstimate out;
    out.grid = grid;
    out.bandwidth = h;
    out.density.assign(grid.size(), 0.0);

    const double norm = 1.0 / (static_cast<double>(samples.size()) * h *
                               std::sqrt(2.0 * std::numbers::pi));
    const std::size_t chunk = 8192;
    Eigen::ArrayXd buf;
    for (std::size_t begin = 0; begin < samples.size(); begin += chunk) {
        const std::size_t len = std::min(chunk, samples.size() - begin);
        Eigen::Map<const Eigen::ArrayXd> s(samples.data() + begin,
                                           static_cast<Eigen::Index>(len));
        for (std::size_t gi = 0; gi < grid.size(); ++gi) {
            buf = (grid[gi] - s) / h;
            out.density[gi] += (-0.5 * buf.square()).exp().sum();
        }
    }
    for (double& d : out.density) d *= norm;
    return out;
}

// Bandwidth rule h = |X|^(-1/5).
inline PdfEstimate kde(const std::vector<double>& samples, const std::vector<double>& grid) {
    if (samples.empty()) throw ParameterError("kde needs at least one sample");
    return kde_with_bandwidth(samples, grid,
                              std::pow(static_cast<double>(samples.size()), -0.2));
}

// Combined L1 + L2 discrepancy, averaged over the compared points.
inline double loss_values(const std::vector<double>& out, const std::vector<double>& target) {
    if (out.size() != target.size() || out.empty())
        throw ShapeError("loss comparison needs matching nonempty value sets");
    double l1 = 0.0, l2 = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double d = out[i] - target[i];
        l1 += std::abs(d);
        l2 += d * d;
    }
    const double n = static_cast<double>(out.size());
    return l1 / n + l2 / n;
}

inline double loss_acf(const AcfCurve& out, const AcfCurve& target) {
    if (out.lags != target.lags) throw ShapeError("loss_acf lag sets differ");
    return loss_values(out.values, target.values);
}

inline double loss_pdf(const PdfEstimate& out, const PdfEstimate& target) {
    if (out.grid != target.grid) throw ShapeError("loss_pdf grids differ");
    return loss_values(out.density, target.density);
}

// Equilibrium transition correlation C_AB(t)/C_A for the regions
// A = (-inf, 0], B = (0, inf): the probability of finding the system in B
// a time t after it was observed in A.
struct TransitionCurve {
    std::vector<double> values;
    double dt = 1.0;
};

inline TransitionCurve transition_correlation(const Ensemble& e, std::size_t max_t) {
    if (e.dim != 1) throw ShapeError("transition_correlation expects a 1-dim ensemble");
    if (max_t >= e.time) throw ParameterError("transition_correlation max_t must be < time length");
    TransitionCurve out;
    out.dt = e.dt;
    out.values.resize(max_t + 1);
    for (std::size_t t = 0; t <= max_t; ++t) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < e.batch; ++i) {
            const auto traj = e.trajectory(i);
            for (std::size_t s = 0; s + t < e.time; ++s) {
                if (traj[s] <= 0.0) {
                    den += 1.0;
                    if (traj[s + t] > 0.0) num += 1.0;
                }
            }
        }
        if (den == 0.0)
            throw DegenerateError("transition_correlation: no visits to region A");
        out.values[t] = num / den;
    }
    return out;
}

// Ordinary least-squares slope of the correlation curve over a time window,
// in units of 1/time. A zero-variance response is reported as slope 0 with
// the degeneracy flag set.
struct RateFit {
    double k_ab = 0.0;
    double r_squared = 0.0;
    bool degenerate = false;
};

inline RateFit transition_rate(const TransitionCurve& curve, double t_lo, double t_hi) {
    if (!(curve.dt > 0)) throw ParameterError("transition_rate needs dt > 0");
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < curve.values.size(); ++i) {
        const double t = static_cast<double>(i) * curve.dt;
        if (t >= t_lo - 1e-12 && t <= t_hi + 1e-12) {
            xs.push_back(t);
            ys.push_back(curve.values[i]);
        }
    }
    if (xs.size() < 2) throw ParameterError("transition_rate window holds fewer than 2 points");

    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    RateFit fit;
    if (syy == 0.0) {
        fit.k_ab = 0.0;
        fit.r_squared = 0.0;
        fit.degenerate = true;
        return fit;
    }
    fit.k_ab = sxy / sxx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double pred = my + fit.k_ab * (xs[i] - mx);
        ss_res += (ys[i] - pred) * (ys[i] - pred);
    }
    fit.r_squared = 1.0 - ss_res / syy;
    return fit;
}

// ---- two-column CSV forms (single header row carrying dt / bandwidth) ----

namespace detail {

inline std::string format_double(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

} // namespace detail

inline std::string to_csv(const AcfCurve& c) {
    std::string out = "lag_time,value,dt=" + detail::format_double(c.dt) + "\n";
    for (std::size_t i = 0; i < c.lags.size(); ++i)
        out += detail::format_double(static_cast<double>(c.lags[i]) * c.dt) + "," +
               detail::format_double(c.values[i]) + "\n";
    return out;
}

inline std::string to_csv(const PdfEstimate& p) {
    std::string out = "x,density,bandwidth=" + detail::format_double(p.bandwidth) + "\n";
    for (std::size_t i = 0; i < p.grid.size(); ++i)
        out += detail::format_double(p.grid[i]) + "," + detail::format_double(p.density[i]) +
               "\n";
    return out;
}

inline std::string to_csv(const TransitionCurve& c) {
    std::string out = "t,probability,dt=" + detail::format_double(c.dt) + "\n";
    for (std::size_t i = 0; i < c.values.size(); ++i)
        out += detail::format_double(static_cast<double>(i) * c.dt) + "," +
               detail::format_double(c.values[i]) + "\n";
    return out;
}

inline AcfCurve acf_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("acf csv: empty input");
    const auto pos = line.rfind("dt=");
    if (line.rfind("lag_time,value", 0) != 0 || pos == std::string::npos)
        throw FormatError("acf csv: bad header");
    AcfCurve c;
    c.dt = std::stod(line.substr(pos + 3));
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw FormatError("acf csv: bad row");
        const double t = std::stod(line.substr(0, comma));
        c.lags.push_back(static_cast<std::size_t>(std::llround(t / c.dt)));
        c.values.push_back(std::stod(line.substr(comma + 1)));
    }
    if (c.lags.empty()) throw FormatError("acf csv: no rows");
    return c;
}

inline PdfEstimate pdf_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("pdf csv: empty input");
    const auto pos = line.rfind("bandwidth=");
    if (line.rfind("x,density", 0) != 0 || pos == std::string::npos)
        throw FormatError("pdf csv: bad header");
    PdfEstimate p;
    p.bandwidth = std::stod(line.substr(pos + 10));
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw FormatError("pdf csv: bad row");
        p.grid.push_back(std::stod(line.substr(0, comma)));
        p.density.push_back(std::stod(line.substr(comma + 1)));
    }
    if (p.grid.empty()) throw FormatError("pdf csv: no rows");
    return p;
}

} // namespace sinn

#endif
