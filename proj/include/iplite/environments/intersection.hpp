#pragma once

// Two-car intersection on a square grid. Row 0 is north, column 0 is west.
// The autonomous car (self) enters at the bottom row heading north; the
// human-driven car (other) enters at the leftmost column heading east. The
// four corner cells are not passable.
//
// A state is (AV cell, HV cell, AV speed, HV speed) plus two absorbing
// states: the AV has cleared the intersection, or an accident happened.
// The AV clears on reaching row 0. The HV is through once it reaches the
// last column; from then on it stays put and can no longer collide.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "iplite/environments/grid.hpp"
#include "iplite/model.hpp"

namespace iplite {

enum IntersectionAction : std::size_t { kSlow = 0, kForwardRight = 1, kForwardLeft = 2, kForward = 3, kFast = 4 };
inline constexpr std::size_t kIntersectionActions = 5;
inline constexpr std::array<int, kIntersectionActions> kActionSpeed{0, 1, 1, 1, 2};

inline const char* intersection_action_name(std::size_t a) {
    static const char* names[] = {"slow", "forward-right", "forward-left", "forward", "fast"};
    return names[a];
}

struct IntersectionSpec {
    std::size_t size = 7;
    double delay_cost = 1.0;     // D
    double accident_cost = 100.0;  // C
    double discount = 0.99;
    // How the HV is modeled when reasoning about it: the scripted driver
    // weighs only the accident risk of its next move, so by default the HV
    // is a myopic accident avoider with no delay cost.
    double hv_delay_cost = 0.0;
    double hv_discount = 0.0;
};

struct CarState {
    Cell cell;
    int speed = 0;
    friend bool operator==(const CarState&, const CarState&) = default;
};

struct IntersectionState {
    CarState av;
    CarState hv;
    friend bool operator==(const IntersectionState&, const IntersectionState&) = default;
};

class IntersectionLayout {
public:
    explicit IntersectionLayout(const IntersectionSpec& spec = {}) : spec_(spec) {
        if (spec.size < 3) throw std::invalid_argument("intersection grid must be at least 3x3");
        const int n = static_cast<int>(spec.size);
        index_.assign(spec.size * spec.size, -1);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) {
                if (is_corner(r, c)) continue;
                index_[r * n + c] = static_cast<int>(cells_.size());
                cells_.push_back({r, c});
            }
    }

    const IntersectionSpec& spec() const { return spec_; }
    int size() const { return static_cast<int>(spec_.size); }
    std::size_t num_cells() const { return cells_.size(); }
    std::size_t num_car_states() const { return num_cells() * num_cells() * 9; }
    std::size_t num_states() const { return num_car_states() + 2; }
    std::size_t cleared_state() const { return num_car_states(); }
    std::size_t accident_state() const { return num_car_states() + 1; }
    bool is_terminal(std::size_t s) const { return s >= num_car_states(); }

    bool passable(Cell c) const {
        return c.row >= 0 && c.col >= 0 && c.row < size() && c.col < size() && !is_corner(c.row, c.col);
    }

    std::size_t cell_index(Cell c) const {
        const int i = index_.at(static_cast<std::size_t>(c.row * size() + c.col));
        if (i < 0) throw std::invalid_argument("cell is not passable");
        return static_cast<std::size_t>(i);
    }
    Cell cell_at(std::size_t i) const { return cells_.at(i); }

    std::size_t encode(const IntersectionState& st) const {
        const std::size_t n = num_cells();
        return ((cell_index(st.av.cell) * n + cell_index(st.hv.cell)) * 3 + static_cast<std::size_t>(st.av.speed)) * 3 +
               static_cast<std::size_t>(st.hv.speed);
    }

    IntersectionState decode(std::size_t s) const {
        if (is_terminal(s)) throw std::invalid_argument("terminal states have no car configuration");
        IntersectionState st;
        st.hv.speed = static_cast<int>(s % 3);
        s /= 3;
        st.av.speed = static_cast<int>(s % 3);
        s /= 3;
        st.hv.cell = cell_at(s % num_cells());
        st.av.cell = cell_at(s / num_cells());
        return st;
    }

    IntersectionState initial() const {
        const int n = size();
        return {{{n - 1, n / 2}, 1}, {{n / 2, 0}, 1}};
    }

    bool av_cleared(Cell c) const { return c.row == 0; }
    bool hv_through(Cell c) const { return c.col == size() - 1; }

    // Displacement of one action in grid coordinates for either car.
    static Cell displacement(Seat car, std::size_t a) {
        // AV heads north (row decreases); HV heads east (column increases).
        // "Right" of north is east; "right" of east is south.
        static const std::array<Cell, kIntersectionActions> north{{{0, 0}, {-1, 1}, {-1, -1}, {-1, 0}, {-2, 0}}};
        static const std::array<Cell, kIntersectionActions> east{{{0, 0}, {1, 1}, {-1, 1}, {0, 1}, {0, 2}}};
        return car == Seat::self ? north[a] : east[a];
    }

    // Destination with overshoot of the exit edge clamped onto it.
    Cell destination(Seat car, Cell from, std::size_t a) const {
        const Cell d = displacement(car, a);
        Cell to{from.row + d.row, from.col + d.col};
        if (car == Seat::self && to.row < 0) to.row = 0;
        if (car == Seat::other && to.col > size() - 1) to.col = size() - 1;
        return to;
    }

    bool legal(Seat car, const CarState& st, std::size_t a) const {
        if (car == Seat::other && hv_through(st.cell)) return a == kSlow;
        if (std::abs(kActionSpeed[a] - st.speed) > 1) return false;
        return passable(destination(car, st.cell, a));
    }

    // Cells a car passes through in one step, start and end included.
    std::vector<Cell> path(Seat car, Cell from, std::size_t a) const {
        const Cell to = destination(car, from, a);
        std::vector<Cell> out{from};
        if (a == kFast) {
            Cell mid{(from.row + to.row) / 2, (from.col + to.col) / 2};
            if (!(mid == from) && !(mid == to)) out.push_back(mid);
        }
        if (!(to == from)) out.push_back(to);
        return out;
    }

    // Accident predicate: the two cell paths share a cell, or the straight
    // movement segments cross.
    bool collides(const IntersectionState& st, std::size_t u, std::size_t v) const {
        if (hv_through(st.hv.cell)) return false;
        const auto pa = path(Seat::self, st.av.cell, u);
        const auto pb = path(Seat::other, st.hv.cell, v);
        for (const auto& a : pa)
            for (const auto& b : pb)
                if (a == b) return true;
        return segments_cross(st.av.cell, destination(Seat::self, st.av.cell, u), st.hv.cell,
                              destination(Seat::other, st.hv.cell, v));
    }

    // Resulting state index of a joint action. Illegal actions keep the car
    // where it is at speed 0.
    std::size_t step(std::size_t s, std::size_t u, std::size_t v) const {
        if (is_terminal(s)) return s;
        const IntersectionState st = decode(s);
        const bool lu = legal(Seat::self, st.av, u), lv = legal(Seat::other, st.hv, v);
        const std::size_t au = lu ? u : kSlow, av = lv ? v : kSlow;
        if (collides(st, au, av)) return accident_state();
        IntersectionState next = st;
        next.av = {destination(Seat::self, st.av.cell, au), kActionSpeed[au]};
        next.hv = {destination(Seat::other, st.hv.cell, av), kActionSpeed[av]};
        if (hv_through(st.hv.cell)) next.hv = st.hv;
        if (av_cleared(next.av.cell)) return cleared_state();
        return encode(next);
    }

    // Fewest steps for the AV alone to clear from the initial state.
    std::size_t min_clear_steps() const {
        std::vector<int> seen(num_cells() * 3, 0);
        std::vector<CarState> frontier{initial().av};
        seen[cell_index(frontier[0].cell) * 3 + static_cast<std::size_t>(frontier[0].speed)] = 1;
        for (std::size_t steps = 1; !frontier.empty(); ++steps) {
            std::vector<CarState> next;
            for (const auto& st : frontier)
                for (std::size_t a = 0; a < kIntersectionActions; ++a) {
                    if (!legal(Seat::self, st, a)) continue;
                    const CarState to{destination(Seat::self, st.cell, a), kActionSpeed[a]};
                    if (av_cleared(to.cell)) return steps;
                    int& mark = seen[cell_index(to.cell) * 3 + static_cast<std::size_t>(to.speed)];
                    if (mark) continue;
                    mark = 1;
                    next.push_back(to);
                }
            frontier = std::move(next);
        }
        throw std::logic_error("the AV cannot clear this intersection");
    }

private:
    bool is_corner(int r, int c) const {
        const int n = size() - 1;
        return (r == 0 || r == n) && (c == 0 || c == n);
    }

    static int orientation(Cell a, Cell b, Cell c) {
        const long v = static_cast<long>(b.col - a.col) * (c.row - a.row) - static_cast<long>(b.row - a.row) * (c.col - a.col);
        return (v > 0) - (v < 0);
    }

    // Proper crossing of two non-degenerate segments; shared cells are
    // already covered by the path test.
    static bool segments_cross(Cell a1, Cell a2, Cell b1, Cell b2) {
        if (a1 == a2 || b1 == b2) return false;
        const int o1 = orientation(a1, a2, b1), o2 = orientation(a1, a2, b2);
        const int o3 = orientation(b1, b2, a1), o4 = orientation(b1, b2, a2);
        return o1 * o2 < 0 && o3 * o4 < 0;
    }

    IntersectionSpec spec_;
    std::vector<Cell> cells_;
    std::vector<int> index_;
};

// Self is the AV and other is the HV. The AV pays D per step and C when the
// joint move causes an accident; the HV pays its own delay cost while in
// the grid and C on an accident.
inline PosgModel build_intersection(const IntersectionSpec& spec = {}) {
    IntersectionLayout layout(spec);
    const std::size_t S = layout.num_states(), A = kIntersectionActions;
    PosgModel m;
    m.num_states = S;
    m.num_actions_self = A;
    m.num_actions_other = A;
    m.num_observations = 1;
    m.discount = spec.discount;
    if (spec.hv_discount != spec.discount) m.discount_other = spec.hv_discount;
    m.zero_sum = false;
    m.transition.reserve(S * A * A, S * A * A);
    m.reward.assign(S * A * A, 0.0);
    m.reward_other.assign(S * A * A, 0.0);
    m.legal_self.assign(S * A, 0);
    m.legal_other.assign(S * A, 0);
    for (std::size_t s = 0; s < S; ++s) {
        const bool terminal = layout.is_terminal(s);
        IntersectionState st{};
        if (!terminal) st = layout.decode(s);
        for (std::size_t a = 0; a < A; ++a) {
            m.legal_self[s * A + a] = terminal ? a == kSlow : layout.legal(Seat::self, st.av, a);
            m.legal_other[s * A + a] = terminal ? a == kSlow : layout.legal(Seat::other, st.hv, a);
        }
        // Fall back to standing still if geometry leaves no legal move.
        if (!terminal) {
            bool any_u = false, any_v = false;
            for (std::size_t a = 0; a < A; ++a) {
                any_u |= m.legal_self[s * A + a] != 0;
                any_v |= m.legal_other[s * A + a] != 0;
            }
            if (!any_u) m.legal_self[s * A + kSlow] = 1;
            if (!any_v) m.legal_other[s * A + kSlow] = 1;
        }
        for (std::size_t u = 0; u < A; ++u)
            for (std::size_t v = 0; v < A; ++v) {
                const std::size_t next = layout.step(s, u, v);
                std::vector<Transition> row{{next, 1.0}};
                m.transition.push_row(row);
                if (terminal) continue;
                const std::size_t r = m.row_index(s, u, v);
                const bool crash = next == layout.accident_state();
                m.reward[r] = -spec.delay_cost - (crash ? spec.accident_cost : 0.0);
                const bool hv_in = !layout.hv_through(st.hv.cell);
                m.reward_other[r] = (hv_in ? -spec.hv_delay_cost : 0.0) - (crash ? spec.accident_cost : 0.0);
            }
    }
    m.observation.assign(S * A, 1.0);
    m.initial_belief.assign(S, 0.0);
    m.initial_belief[layout.encode(layout.initial())] = 1.0;
    return m;
}

}  // namespace iplite
