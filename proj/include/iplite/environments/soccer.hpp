#pragma once

// Grid soccer for two players. Player A (self) scores by carrying the ball
// off the left edge through one of the goal rows; player B (other) scores
// off the right edge. Carrying the ball into one's own goal scores for the
// opponent. Each step is a draw with some probability; otherwise the two
// moves execute one after the other in a uniformly random order.

#include <algorithm>
#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "iplite/environments/grid.hpp"
#include "iplite/model.hpp"

namespace iplite {

enum SoccerAction : std::size_t { kUp = 0, kDown = 1, kLeft = 2, kRight = 3, kStand = 4 };
inline constexpr std::size_t kSoccerActions = 5;

inline const char* soccer_action_name(std::size_t a) {
    static const char* names[] = {"up", "down", "left", "right", "stand"};
    return names[a];
}

struct SoccerSpec {
    int rows = 4;
    int cols = 5;
    double draw_probability = 0.1;
    double discount = 0.9;
};

struct SoccerState {
    Cell a;
    Cell b;
    Seat ball = Seat::self;  // self is player A
    friend bool operator==(const SoccerState&, const SoccerState&) = default;
};

class SoccerLayout {
public:
    explicit SoccerLayout(const SoccerSpec& spec = {}) : spec_(spec) {
        if (spec.rows < 2 || spec.cols < 2) throw std::invalid_argument("soccer grid must be at least 2x2");
        if (!(spec.draw_probability >= 0.0 && spec.draw_probability < 1.0))
            throw std::invalid_argument("draw probability must lie in [0, 1)");
    }

    const SoccerSpec& spec() const { return spec_; }
    std::size_t num_cells() const { return static_cast<std::size_t>(spec_.rows * spec_.cols); }
    std::size_t num_play_states() const { return num_cells() * (num_cells() - 1) * 2; }
    std::size_t num_states() const { return num_play_states() + 3; }
    std::size_t a_scored_state() const { return num_play_states(); }
    std::size_t b_scored_state() const { return num_play_states() + 1; }
    std::size_t draw_state() const { return num_play_states() + 2; }
    bool is_terminal(std::size_t s) const { return s >= num_play_states(); }

    // Goal rows are the middle rows (rows 1 and 2 on a 4-row pitch).
    bool goal_row(int r) const {
        const int lo = spec_.rows / 2 - 1, hi = spec_.rows / 2;
        return r >= lo && r <= hi;
    }
    // Heading column step of a player when attacking.
    static int heading(Seat p) { return p == Seat::self ? -1 : +1; }

    std::size_t encode(const SoccerState& st) const {
        const std::size_t ia = flat(st.a), ib = flat(st.b);
        if (ia == ib) throw std::invalid_argument("players cannot share a square");
        const std::size_t jb = ib < ia ? ib : ib - 1;
        return ((ia * (num_cells() - 1)) + jb) * 2 + (st.ball == Seat::self ? 0 : 1);
    }

    SoccerState decode(std::size_t s) const {
        if (is_terminal(s)) throw std::invalid_argument("terminal soccer states have no configuration");
        SoccerState st;
        st.ball = s % 2 == 0 ? Seat::self : Seat::other;
        s /= 2;
        const std::size_t ia = s / (num_cells() - 1), jb = s % (num_cells() - 1);
        const std::size_t ib = jb < ia ? jb : jb + 1;
        st.a = unflat(ia);
        st.b = unflat(ib);
        return st;
    }

    SoccerState initial(Seat ball) const {
        return {{spec_.rows / 2, spec_.cols - 2}, {spec_.rows / 2 - 1, 1}, ball};
    }

    static Cell delta(std::size_t a) {
        static const std::array<Cell, kSoccerActions> d{{{-1, 0}, {1, 0}, {0, -1}, {0, 1}, {0, 0}}};
        return d[a];
    }

    // Outcome of one player's move from a configuration; returns a terminal
    // index when it scores, or the encoded configuration otherwise.
    std::size_t move(const SoccerState& st, Seat mover, std::size_t a) const {
        SoccerState next = st;
        Cell& me = mover == Seat::self ? next.a : next.b;
        const Cell& them = mover == Seat::self ? next.b : next.a;
        const Cell d = delta(a);
        Cell to{me.row + d.row, me.col + d.col};
        if (st.ball == mover && goal_row(me.row) && d.col != 0 && (to.col < 0 || to.col >= spec_.cols)) {
            const bool left = to.col < 0;
            const bool a_scores = left;  // the left goal belongs to A's attack
            return a_scores ? a_scored_state() : b_scored_state();
        }
        to.row = std::clamp(to.row, 0, spec_.rows - 1);
        to.col = std::clamp(to.col, 0, spec_.cols - 1);
        if (to == them) {
            next.ball = opposite(mover);
            return encode(next);
        }
        me = to;
        return encode(next);
    }

    // Distribution over next states of a joint action.
    std::vector<Transition> step(std::size_t s, std::size_t u, std::size_t v) const {
        if (is_terminal(s)) return {{s, 1.0}};
        const SoccerState st = decode(s);
        const double play = 1.0 - spec_.draw_probability;
        std::vector<Transition> out;
        auto add = [&](std::size_t n, double p) {
            if (p == 0.0) return;
            for (auto& t : out)
                if (t.next == n) {
                    t.prob += p;
                    return;
                }
            out.push_back({n, p});
        };
        add(draw_state(), spec_.draw_probability);
        for (int order = 0; order < 2; ++order) {
            const Seat first = order == 0 ? Seat::self : Seat::other;
            const std::size_t a1 = first == Seat::self ? u : v, a2 = first == Seat::self ? v : u;
            const std::size_t mid = move(st, first, a1);
            if (is_terminal(mid)) {
                add(mid, 0.5 * play);
                continue;
            }
            add(move(decode(mid), opposite(first), a2), 0.5 * play);
        }
        std::sort(out.begin(), out.end(), [](const Transition& x, const Transition& y) { return x.next < y.next; });
        return out;
    }

private:
    std::size_t flat(Cell c) const {
        if (c.row < 0 || c.col < 0 || c.row >= spec_.rows || c.col >= spec_.cols)
            throw std::invalid_argument("cell outside the pitch");
        return static_cast<std::size_t>(c.row * spec_.cols + c.col);
    }
    Cell unflat(std::size_t i) const { return {static_cast<int>(i) / spec_.cols, static_cast<int>(i) % spec_.cols}; }

    SoccerSpec spec_;
};

// Zero-sum from A's point of view: +1 when A scores, -1 when B scores.
// The game starts from the kickoff positions with the ball owner drawn
// uniformly; terminal states absorb with zero reward.
inline PosgModel build_soccer(const SoccerSpec& spec = {}) {
    SoccerLayout layout(spec);
    const std::size_t S = layout.num_states(), A = kSoccerActions;
    PosgModel m;
    m.num_states = S;
    m.num_actions_self = A;
    m.num_actions_other = A;
    m.num_observations = 1;
    m.discount = spec.discount;
    m.zero_sum = true;
    m.reward.assign(S * A * A, 0.0);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t u = 0; u < A; ++u)
            for (std::size_t v = 0; v < A; ++v) {
                auto row = layout.step(s, u, v);
                double r = 0.0;
                if (!layout.is_terminal(s))
                    for (const auto& t : row) {
                        if (t.next == layout.a_scored_state()) r += t.prob;
                        if (t.next == layout.b_scored_state()) r -= t.prob;
                    }
                m.reward[m.row_index(s, u, v)] = r;
                m.transition.push_row(row);
            }
    m.observation.assign(S * A, 1.0);
    m.initial_belief.assign(S, 0.0);
    m.initial_belief[layout.encode(layout.initial(Seat::self))] = 0.5;
    m.initial_belief[layout.encode(layout.initial(Seat::other))] = 0.5;
    return m;
}

}  // namespace iplite
