#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace iplite {

// Pairwise summation; the reduction tree depends only on the length, so
// the result is reproducible regardless of how the inputs were produced.
inline double pairwise_sum(std::span<const double> xs) {
    if (xs.size() <= 8) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

struct MeanEstimate {
    double mean = 0.0;
    double halfwidth = 0.0;  // 1.96 * standard error
    std::size_t n = 0;
};

// Mean and normal-approximation 95% halfwidth. Deviations are taken from the
// first sample, so identical samples give exactly that value and zero width.
inline MeanEstimate estimate_mean(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("estimate_mean: empty sample");
    MeanEstimate e;
    e.n = xs.size();
    const double pivot = xs.front();
    std::vector<double> d(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) d[i] = xs[i] - pivot;
    const double dbar = pairwise_sum(d) / static_cast<double>(xs.size());
    e.mean = pivot + dbar;
    if (xs.size() >= 2) {
        for (auto& x : d) x = (x - dbar) * (x - dbar);
        const double var = pairwise_sum(d) / static_cast<double>(xs.size() - 1);
        e.halfwidth = 1.96 * std::sqrt(var / static_cast<double>(xs.size()));
    }
    return e;
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

inline LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: need >= 2 paired points");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LinearFit f;
    f.slope = sxx > 0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    f.r_squared = (sxx > 0 && syy > 0) ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

// Least-squares slope of y = c * x (line through the origin).
inline double fit_through_origin(std::span<const double> x, std::span<const double> y) {
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += x[i] * y[i];
        sxx += x[i] * x[i];
    }
    return sxx > 0 ? sxy / sxx : 0.0;
}

}  // namespace iplite
