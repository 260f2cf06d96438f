#pragma once

// Exact solution of two-player zero-sum matrix games by linear programming.
// The row player maximizes. A small dense tableau simplex with Bland's rule
// is plenty for the 5x5 stage games that appear here.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace iplite {

struct MatrixGameSolution {
    std::vector<double> row;  // maximin strategy of the row player
    std::vector<double> col;  // minimax strategy of the column player
    double value = 0.0;
    double gap = 0.0;  // best-response upper value minus security lower value
};

namespace detail {

// Maximizes Σ y subject to A y <= 1, y >= 0 for a strictly positive A.
// Returns (y, dual x); both unnormalized.
inline void simplex_positive(const std::vector<double>& a, std::size_t m, std::size_t n, std::vector<double>& y,
                             std::vector<double>& x) {
    const std::size_t width = n + m + 1;
    std::vector<double> t((m + 1) * width, 0.0);
    auto at = [&](std::size_t r, std::size_t c) -> double& { return t[r * width + c]; };
    std::vector<std::size_t> basis(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) at(i, j) = a[i * n + j];
        at(i, n + i) = 1.0;
        at(i, width - 1) = 1.0;
        basis[i] = n + i;
    }
    for (std::size_t j = 0; j < n; ++j) at(m, j) = -1.0;

    constexpr double eps = 1e-12;
    for (std::size_t iter = 0; iter < 10000; ++iter) {
        std::size_t enter = width;
        for (std::size_t j = 0; j + 1 < width; ++j)
            if (at(m, j) < -eps) {
                enter = j;
                break;
            }
        if (enter == width) break;
        std::size_t leave = m;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m; ++i) {
            if (at(i, enter) <= eps) continue;
            const double ratio = at(i, width - 1) / at(i, enter);
            const bool better = leave == m || ratio < best_ratio - eps;
            const bool tie = leave < m && std::abs(ratio - best_ratio) <= eps && basis[i] < basis[leave];
            if (better || tie) {
                best_ratio = ratio;
                leave = i;
            }
        }
        if (leave == m) throw std::logic_error("matrix game LP is unbounded");
        const double pivot = at(leave, enter);
        for (std::size_t c = 0; c < width; ++c) at(leave, c) /= pivot;
        for (std::size_t r = 0; r <= m; ++r) {
            if (r == leave) continue;
            const double f = at(r, enter);
            if (f == 0.0) continue;
            for (std::size_t c = 0; c < width; ++c) at(r, c) -= f * at(leave, c);
        }
        basis[leave] = enter;
    }
    y.assign(n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        if (basis[i] < n) y[basis[i]] = at(i, width - 1);
    x.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) x[i] = std::max(0.0, at(m, n + i));
}

}  // namespace detail

// a is row-major rows x cols, payoff to the row player.
inline MatrixGameSolution solve_matrix_game(const std::vector<double>& a, std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0 || a.size() != rows * cols)
        throw std::invalid_argument("solve_matrix_game: bad matrix shape");
    const double lo = *std::min_element(a.begin(), a.end());
    const double shift = 1.0 - lo;
    std::vector<double> positive(a);
    for (auto& x : positive) x += shift;

    std::vector<double> y, x;
    detail::simplex_positive(positive, rows, cols, y, x);
    double sy = 0.0, sx = 0.0;
    for (double v : y) sy += v;
    for (double v : x) sx += v;

    MatrixGameSolution sol;
    sol.row.resize(rows);
    sol.col.resize(cols);
    for (std::size_t i = 0; i < rows; ++i) sol.row[i] = x[i] / sx;
    for (std::size_t j = 0; j < cols; ++j) sol.col[j] = y[j] / sy;

    double lower = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cols; ++j) {
        double v = 0.0;
        for (std::size_t i = 0; i < rows; ++i) v += sol.row[i] * a[i * cols + j];
        lower = std::min(lower, v);
    }
    double upper = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rows; ++i) {
        double v = 0.0;
        for (std::size_t j = 0; j < cols; ++j) v += a[i * cols + j] * sol.col[j];
        upper = std::max(upper, v);
    }
    sol.value = 0.5 * (lower + upper);
    sol.gap = upper - lower;
    return sol;
}

// Security value of a fixed row strategy: min over columns of its payoff.
inline double security_value(const std::vector<double>& a, std::size_t rows, std::size_t cols,
                             const std::vector<double>& row) {
    double lower = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cols; ++j) {
        double v = 0.0;
        for (std::size_t i = 0; i < rows; ++i) v += row[i] * a[i * cols + j];
        lower = std::min(lower, v);
    }
    return lower;
}

}  // namespace iplite
