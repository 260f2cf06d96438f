#pragma once

// Planning-time sweeps for the I-POMDP Lite agent over the horizon h or the
// reasoning level k. Each point is planned `repeats` times and summarized
// by its minimum, the least noise-sensitive estimate of the work done.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "iplite/baselines.hpp"
#include "iplite/core/stats.hpp"
#include "iplite/core/text.hpp"

namespace iplite {

enum class BenchAxis { horizon, level };

inline BenchAxis parse_bench_axis(const std::string& s) {
    if (s == "h") return BenchAxis::horizon;
    if (s == "k") return BenchAxis::level;
    throw std::invalid_argument("bench sweep must be 'h' or 'k', got '" + s + "'");
}

struct BenchPoint {
    std::size_t value = 0;  // h or k
    std::vector<double> ms;

    double min_ms() const { return *std::min_element(ms.begin(), ms.end()); }
};

struct BenchSettings {
    BenchAxis axis = BenchAxis::horizon;
    std::vector<std::size_t> values;
    std::size_t fixed_level = 1;     // k while sweeping h
    std::size_t fixed_horizon = 10;  // h while sweeping k
    std::size_t beliefs = 100;
    std::size_t repeats = 5;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
};

struct BenchResult {
    BenchSettings settings;
    std::vector<BenchPoint> points;

    LinearFit fit() const {
        std::vector<double> x, y;
        for (const auto& p : points) {
            x.push_back(static_cast<double>(p.value));
            y.push_back(p.min_ms());
        }
        return fit_line(x, y);
    }

    // (max - min) / min over the per-point minima.
    double relative_spread() const {
        double lo = points.front().min_ms(), hi = lo;
        for (const auto& p : points) {
            lo = std::min(lo, p.min_ms());
            hi = std::max(hi, p.min_ms());
        }
        return lo > 0.0 ? (hi - lo) / lo : 0.0;
    }
};

// Repeats run round-robin over the sweep values after one untimed warm-up
// plan, so slow drift in machine speed affects every point alike.
inline BenchResult bench_planning(const PosgModel& m, const BenchSettings& settings) {
    if (settings.values.empty()) throw std::invalid_argument("bench needs at least one sweep value");
    if (settings.repeats == 0) throw std::invalid_argument("bench needs at least one repeat");
    const bool sweep_h = settings.axis == BenchAxis::horizon;
    auto plan_ms = [&](std::size_t value) {
        const std::size_t h = sweep_h ? value : settings.fixed_horizon;
        const std::size_t k = sweep_h ? settings.fixed_level : value;
        return make_pomdp_plan(m, Seat::self, static_cast<int>(k), h, settings.beliefs, settings.seed, 0,
                               settings.workers)
            ->planning_ms;
    };
    BenchResult out;
    out.settings = settings;
    for (std::size_t value : settings.values) {
        if (sweep_h && value == 0) throw std::invalid_argument("bench horizon must be at least 1");
        out.points.push_back({value, {}});
    }
    if (!sweep_h && settings.fixed_horizon == 0) throw std::invalid_argument("bench horizon must be at least 1");
    plan_ms(settings.values.front());
    for (std::size_t r = 0; r < settings.repeats; ++r)
        for (auto& p : out.points) p.ms.push_back(plan_ms(p.value));
    return out;
}

inline void write_bench_csv(std::ostream& out, const BenchResult& r) {
    out << (r.settings.axis == BenchAxis::horizon ? "h" : "k") << ",repeats,min_ms,max_ms\n";
    for (const auto& p : r.points)
        out << p.value << ',' << p.ms.size() << ',' << format_17g(p.min_ms()) << ','
            << format_17g(*std::max_element(p.ms.begin(), p.ms.end())) << '\n';
}

}  // namespace iplite
