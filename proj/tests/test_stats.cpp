#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sinn/rng.hpp"
#include "sinn/sde.hpp"
#include "sinn/stats.hpp"

using namespace sinn;

namespace {

Ensemble from_values(std::vector<double> vals) {
    Ensemble e(1, vals.size(), 1, 1.0);
    e.data = std::move(vals);
    return e;
}

// O(n^2) direct DFT oracle for the radix-2 transform.
std::vector<std::complex<double>> naive_dft(const std::vector<std::complex<double>>& in) {
    const std::size_t n = in.size();
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc(0, 0);
        for (std::size_t t = 0; t < n; ++t) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * t) /
                               static_cast<double>(n);
            acc += in[t] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

} // namespace

TEST(Fft, MatchesNaiveDftAndInverts) {
    Xoshiro256 g(3);
    std::vector<std::complex<double>> a(64);
    for (auto& z : a) z = {g.gaussian(), g.gaussian()};
    auto spectrum = a;
    fft_radix2(spectrum, false);
    const auto oracle = naive_dft(a);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_NEAR(spectrum[i].real(), oracle[i].real(), 1e-10);
        EXPECT_NEAR(spectrum[i].imag(), oracle[i].imag(), 1e-10);
    }
    fft_radix2(spectrum, true);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_NEAR(spectrum[i].real(), a[i].real(), 1e-12);
        EXPECT_NEAR(spectrum[i].imag(), a[i].imag(), 1e-12);
    }
    std::vector<std::complex<double>> bad(12);
    EXPECT_THROW(fft_radix2(bad, false), ParameterError);
}

TEST(AcfBrute, AlternatingSequence) {
    const auto acf = acf_brute(from_values({1, -1, 1, -1}), 2);
    EXPECT_DOUBLE_EQ(acf.values[0], 1.0);
    EXPECT_DOUBLE_EQ(acf.values[1], -1.0);
    EXPECT_DOUBLE_EQ(acf.values[2], 1.0);
}

TEST(AcfBrute, ConstantSignalIsDegenerate) {
    EXPECT_THROW(acf_brute(from_values({3.5, 3.5, 3.5, 3.5}), 2), DegenerateError);
}

TEST(AcfBrute, GuardsShapeAndLength) {
    EXPECT_THROW(acf_brute(from_values({1.0}), 0), InsufficientDataError);
    EXPECT_THROW(acf_fft(from_values({1.0}), 0), InsufficientDataError);
    EXPECT_THROW(acf_brute(from_values({1, 2, 3}), 3), ParameterError);
    Ensemble wide(1, 4, 2, 1.0);
    EXPECT_THROW(acf_brute(wide, 2), ShapeError);
}

TEST(AcfBrute, OuEnsembleMatchesExponentialDecay) {
    // ACF(tau dt = 1) for theta = 1 is e^{-1}
    const SdeSystem sys = Ou{1.0, 0.5};
    const auto fine = simulate(sys, 0.01, 2001, 5000, 31, {});
    const auto coarse = coarse_grain(fine.component(0), 10); // dt = 0.1
    const auto acf = acf_brute(coarse, 20);
    EXPECT_NEAR(acf.values[10], std::exp(-1.0), 0.02);
}

TEST(AcfFft, EqualsBruteOnRandomEnsembles) {
    Xoshiro256 g(17);
    for (int rep = 0; rep < 8; ++rep) {
        const std::size_t n = 32 + static_cast<std::size_t>(g.uniform01() * 2016);
        const std::size_t b = 1 + static_cast<std::size_t>(g.uniform01() * 4);
        Ensemble e(b, n, 1, 1.0);
        // mildly correlated signal
        for (std::size_t i = 0; i < b; ++i) {
            double x = g.gaussian();
            for (std::size_t t = 0; t < n; ++t) {
                x = 0.9 * x + g.gaussian();
                e.at(i, t, 0) = x;
            }
        }
        const std::size_t max_lag = n - 1;
        const auto brute = acf_brute(e, max_lag);
        const auto fft = acf_fft(e, max_lag);
        for (std::size_t tau = 0; tau <= max_lag; ++tau) {
            const double scale = std::max({1.0, std::abs(brute.values[tau])});
            EXPECT_LE(std::abs(brute.values[tau] - fft.values[tau]), 1e-10 * scale);
        }
    }
}

TEST(AcfFft, SampledCosineHasUnitAcfAtPeriod) {
    Ensemble e(1, 128, 1, 1.0);
    for (std::size_t t = 0; t < 128; ++t)
        e.at(0, t, 0) = std::cos(2.0 * std::numbers::pi * static_cast<double>(t) / 16.0);
    const auto acf = acf_fft(e, 64);
    EXPECT_NEAR(acf.values[16], 1.0, 1e-6);
}

TEST(Acf, NormalizedValuesBoundedUpToHalfLength) {
    Xoshiro256 g(23);
    for (int rep = 0; rep < 5; ++rep) {
        Ensemble e(3, 257, 1, 1.0);
        for (auto& v : e.data) v = g.uniform(-1.0, 2.0);
        const auto acf = acf_brute(e, 128);
        for (std::size_t tau = 0; tau <= 128; ++tau) {
            EXPECT_LE(acf.values[tau], 1.0 + 1e-12);
            EXPECT_GE(acf.values[tau], -1.0 - 1e-12);
        }
    }
}

TEST(Kde, SingleSampleKernelValue) {
    const auto pdf = kde({0.0}, {0.0});
    EXPECT_NEAR(pdf.density[0], 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-12);
    EXPECT_DOUBLE_EQ(pdf.bandwidth, 1.0);
}

TEST(Kde, SymmetricSamplesGiveSymmetricDensity) {
    const std::vector<double> samples = {-2.0, -1.0, -0.25, 0.25, 1.0, 2.0};
    std::vector<double> grid;
    for (int i = -10; i <= 10; ++i) grid.push_back(0.3 * i);
    const auto pdf = kde(samples, grid);
    for (std::size_t i = 0; i < grid.size(); ++i)
        EXPECT_NEAR(pdf.density[i], pdf.density[grid.size() - 1 - i], 1e-14);
}

TEST(Kde, PermutationInvariantAndNonNegative) {
    std::vector<double> samples = {0.3, -1.2, 2.2, 0.0, -0.7};
    const auto grid = kde_grid(samples, 50);
    const auto a = kde(samples, grid);
    std::swap(samples[0], samples[4]);
    std::swap(samples[1], samples[2]);
    const auto b = kde(samples, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        EXPECT_GE(a.density[i], 0.0);
        EXPECT_NEAR(a.density[i], b.density[i], 1e-15);
    }
    EXPECT_THROW(kde({}, grid), ParameterError);
}

TEST(Kde, NormalSamplesApproachAnalyticDensity) {
    Xoshiro256 g(8);
    std::vector<double> samples(200000);
    for (auto& v : samples) v = g.gaussian();
    std::vector<double> grid;
    for (int i = 0; i < 100; ++i) grid.push_back(-5.0 + 10.0 * i / 99.0);
    const auto pdf = kde(samples, grid);
    double max_dev = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double f = std::exp(-grid[i] * grid[i] / 2.0) / std::sqrt(2.0 * std::numbers::pi);
        max_dev = std::max(max_dev, std::abs(pdf.density[i] - f));
    }
    EXPECT_LT(max_dev, 0.02);
}

TEST(Loss, AcfFormulaValues) {
    AcfCurve a, b;
    a.lags = b.lags = {0, 1, 2, 3};
    a.dt = b.dt = 1.0;
    b.values = {1.0, 0.8, 0.6, 0.4};
    a.values = b.values;
    EXPECT_DOUBLE_EQ(loss_acf(a, b), 0.0);
    for (auto& v : a.values) v += 0.1;
    EXPECT_NEAR(loss_acf(a, b), 0.11, 1e-12);

    AcfCurve c, d;
    c.lags = d.lags = {0};
    c.values = {-0.2};
    d.values = {0.0};
    EXPECT_NEAR(loss_acf(c, d), 0.24, 1e-12);

    AcfCurve mismatched = b;
    mismatched.lags = {0, 1, 2, 4};
    EXPECT_THROW(loss_acf(a, mismatched), ShapeError);
}

TEST(Loss, PdfFormulaValues) {
    PdfEstimate a, b;
    a.grid = b.grid = {0.0, 1.0, 2.0, 3.0};
    a.density = {0.1, 0.2, 0.3, 0.4};
    b.density = a.density;
    EXPECT_DOUBLE_EQ(loss_pdf(a, b), 0.0);
    for (auto& v : a.density) v += 0.05;
    EXPECT_NEAR(loss_pdf(a, b), 0.0525, 1e-12);

    PdfEstimate c, d;
    c.grid = d.grid = {0.0, 1.0};
    c.density = {0.1, 0.0};
    d.density = {0.0, 0.1};
    EXPECT_NEAR(loss_pdf(c, d), 0.11, 1e-12);

    d.grid = {0.0, 1.5};
    EXPECT_THROW(loss_pdf(c, d), ShapeError);
}

TEST(Transition, HandCountedPair) {
    const auto curve = transition_correlation(from_values({-1.0, 1.0}), 1);
    EXPECT_DOUBLE_EQ(curve.values[0], 0.0); // A and B are disjoint
    EXPECT_DOUBLE_EQ(curve.values[1], 1.0);
}

TEST(Transition, ValuesInUnitIntervalAndSymmetricLimit) {
    // symmetric double-well equilibrium: long-lag limit is 1/2
    const SdeSystem sys = DoubleWell{2.0, 1.0, 1.0, 1.0};
    SimulateOptions opt;
    opt.burn_in = 5000;
    const auto fine = simulate(sys, 0.001, 400001, 8, 5, opt);
    const auto x = coarse_grain(fine.component(0), 200);
    const auto curve = transition_correlation(x, x.time / 2);
    for (double v : curve.values) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
    EXPECT_NEAR(curve.values.back(), 0.5, 0.1);
}

TEST(Transition, NoAVisitsIsDegenerate) {
    EXPECT_THROW(transition_correlation(from_values({1.0, 2.0, 3.0}), 1), DegenerateError);
}

TEST(TransitionRate, PerfectLineAndDegenerateCurve) {
    TransitionCurve c;
    c.dt = 1.0;
    for (int t = 0; t <= 60; ++t) c.values.push_back(0.003 * t);
    const auto fit = transition_rate(c, 25.0, 50.0);
    EXPECT_NEAR(fit.k_ab, 0.003, 1e-12);
    EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
    EXPECT_FALSE(fit.degenerate);

    TransitionCurve flat;
    flat.dt = 1.0;
    flat.values.assign(61, 0.25);
    const auto dfit = transition_rate(flat, 25.0, 50.0);
    EXPECT_EQ(dfit.k_ab, 0.0);
    EXPECT_TRUE(dfit.degenerate);

    EXPECT_THROW(transition_rate(c, 100.0, 120.0), ParameterError);
}

TEST(CurveCsv, RoundTrips) {
    AcfCurve a;
    a.dt = 0.1;
    a.lags = {0, 1, 5};
    a.values = {1.0, 0.905, 0.6065306597126334};
    const auto a2 = acf_from_csv(to_csv(a));
    EXPECT_EQ(a2.lags, a.lags);
    EXPECT_EQ(a2.values, a.values);
    EXPECT_EQ(a2.dt, a.dt);

    PdfEstimate p;
    p.bandwidth = 0.0909;
    p.grid = {-1.0, 0.0, 1.0};
    p.density = {0.1, 1.1283791670955126, 0.1};
    const auto p2 = pdf_from_csv(to_csv(p));
    EXPECT_EQ(p2.grid, p.grid);
    EXPECT_EQ(p2.density, p.density);
    EXPECT_EQ(p2.bandwidth, p.bandwidth);

    EXPECT_THROW(acf_from_csv("bogus"), FormatError);
}
