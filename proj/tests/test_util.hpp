#ifndef SINN_TEST_UTIL_HPP
#define SINN_TEST_UTIL_HPP

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "sinn/nn.hpp"
#include "sinn/train.hpp"

namespace sinn::testing {

// Scalar loss of a parameter set; rebuilt per call so it can be finite-differenced.
using LossFn = std::function<double(const SinnParams&)>;

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::size_t checked = 0;
    std::string worst;
};

// Central finite differences (step 1e-5) against the analytic gradients for
// every parameter entry with |grad| > threshold.
inline GradCheckResult gradient_check(const SinnConfig& config, const SinnParams& params,
                                      const SinnParams& analytic, const LossFn& loss,
                                      double step = 1e-5, double threshold = 1e-8) {
    GradCheckResult result;
    SinnParams work = params;
    auto ws = param_arrays(work);
    auto gs = param_arrays(const_cast<SinnParams&>(analytic));
    std::vector<std::string> names;
    for_each_param(const_cast<SinnParams&>(params),
                   [&](const std::string& n, Mat&) { names.push_back(n); });
    (void)config;
    for (std::size_t k = 0; k < ws.size(); ++k) {
        Mat& w = *ws[k];
        const Mat& g = *gs[k];
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) {
                const double ga = g(r, c);
                if (std::abs(ga) <= threshold) continue;
                const double saved = w(r, c);
                w(r, c) = saved + step;
                const double up = loss(work);
                w(r, c) = saved - step;
                const double dn = loss(work);
                w(r, c) = saved;
                const double fd = (up - dn) / (2.0 * step);
                const double rel = std::abs(fd - ga) / std::max(std::abs(ga), std::abs(fd));
                ++result.checked;
                if (rel > result.max_rel_err) {
                    result.max_rel_err = rel;
                    result.worst = names[k] + "(" + std::to_string(r) + "," +
                                   std::to_string(c) + ")";
                }
            }
    }
    return result;
}

inline double trapezoid(const std::vector<double>& grid, const std::vector<double>& y) {
    double acc = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i)
        acc += 0.5 * (y[i] + y[i - 1]) * (grid[i] - grid[i - 1]);
    return acc;
}

inline double normal_pdf(double x, double variance) {
    return std::exp(-x * x / (2.0 * variance)) / std::sqrt(2.0 * std::numbers::pi * variance);
}

} // namespace sinn::testing

#endif
