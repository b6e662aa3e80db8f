#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <vector>

#include "qcd/model.hpp"

namespace qcd::testing {

inline std::vector<double> example_means() { return {0.5, 0.5, 1, 1, 1, 1, 1, 1, 1, 1}; }

/// Ten channels, every singleton plus {1,2,3} (0-based {0,1,2}, last id).
inline MultichannelGaussianModel reduced_model() {
    std::vector<std::vector<std::uint32_t>> sets;
    for (std::uint32_t k = 0; k < 10; ++k) sets.push_back({k});
    sets.push_back({0, 1, 2});
    return MultichannelGaussianModel(example_means(), sets);
}

inline double normal_pdf(double x, double mean) {
    return std::exp(-0.5 * (x - mean) * (x - mean)) / std::sqrt(2.0 * std::numbers::pi);
}

/// Composite trapezoid rule on [lo, hi] with fixed step h.
inline double trapezoid(const std::function<double(double)>& f, double lo, double hi, double h) {
    const auto n = static_cast<std::int64_t>(std::llround((hi - lo) / h));
    double sum = 0.5 * (f(lo) + f(hi));
    for (std::int64_t i = 1; i < n; ++i) sum += f(lo + static_cast<double>(i) * h);
    return sum * h;
}

/// Unit-variance Gaussian divergences by brute-force quadrature, written
/// independently of the library's closed forms.
struct GaussianOracle {
    double lo = -12.0;
    double hi = 12.0;
    double h = 1e-3;

    double kl(double m, double m0) const {
        return trapezoid([&](double x) { return normal_pdf(x, m) * std::log(normal_pdf(x, m) / normal_pdf(x, m0)); },
                         lo, hi, h);
    }
    double cross(double m, double mu, double m0) const {
        return trapezoid([&](double x) { return normal_pdf(x, m) * std::log(normal_pdf(x, mu) / normal_pdf(x, m0)); },
                         lo, hi, h);
    }
    double bhattacharyya(double m, double mu) const {
        return trapezoid([&](double x) { return std::sqrt(normal_pdf(x, m) * normal_pdf(x, mu)); }, lo, hi, h);
    }
    double second_moment(double m, double m0) const {
        return trapezoid(
            [&](double x) {
                const double l = std::log(normal_pdf(x, m) / normal_pdf(x, m0));
                return normal_pdf(x, m) * l * l;
            },
            lo, hi, h);
    }
};

/// Mean and standard error of a sample.
struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    const double var = ss / static_cast<double>(v.size() - 1);
    return {m, std::sqrt(var / static_cast<double>(v.size()))};
}

}  // namespace qcd::testing
