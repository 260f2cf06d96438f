#include <gtest/gtest.h>

#include <array>
#include <deque>
#include <map>
#include <set>
#include <tuple>
#include <vector>

#include "iplite/environments/intersection.hpp"
#include "iplite/environments/random_posg.hpp"
#include "iplite/environments/soccer.hpp"

using namespace iplite;

namespace {

// Independent AV-only dynamics: (row, col, speed) with the same action
// geometry, used for the shortest clearing path.
int av_shortest_clear(int n) {
    const std::array<std::array<int, 3>, 5> moves{{{0, 0, 0}, {-1, 1, 1}, {-1, -1, 1}, {-1, 0, 1}, {-2, 0, 2}}};
    auto blocked = [n](int r, int c) {
        if (r < 0 || c < 0 || r >= n || c >= n) return true;
        return (r == 0 || r == n - 1) && (c == 0 || c == n - 1);
    };
    std::map<std::tuple<int, int, int>, int> dist;
    std::deque<std::tuple<int, int, int>> q;
    dist[{n - 1, n / 2, 1}] = 0;
    q.push_back({n - 1, n / 2, 1});
    while (!q.empty()) {
        auto [r, c, sp] = q.front();
        q.pop_front();
        const int d = dist[{r, c, sp}];
        for (const auto& m : moves) {
            if (std::abs(m[2] - sp) > 1) continue;
            int nr = r + m[0];
            const int nc = c + m[1];
            if (nr < 0) nr = 0;
            if (blocked(nr, nc)) continue;
            if (nr == 0) return d + 1;
            if (!dist.count({nr, nc, m[2]})) {
                dist[{nr, nc, m[2]}] = d + 1;
                q.push_back({nr, nc, m[2]});
            }
        }
    }
    return -1;
}

// Point reflection of the pitch swaps the roles of the two players.
SoccerState reflect(const SoccerLayout& l, const SoccerState& st) {
    const int R = l.spec().rows - 1, C = l.spec().cols - 1;
    return {{R - st.b.row, C - st.b.col}, {R - st.a.row, C - st.a.col}, opposite(st.ball)};
}

std::size_t reflect_action(std::size_t a) {
    static const std::size_t map[] = {kDown, kUp, kRight, kLeft, kStand};
    return map[a];
}

double prob_of(const PosgModel& m, std::size_t s, std::size_t u, std::size_t v, std::size_t next) {
    double p = 0.0;
    for (const auto& t : m.next_states(s, u, v))
        if (t.next == next) p += t.prob;
    return p;
}

}  // namespace

TEST(Intersection, DefaultsAndStateCount) {
    IntersectionSpec spec;
    EXPECT_EQ(spec.delay_cost, 1.0);
    EXPECT_EQ(spec.accident_cost, 100.0);
    EXPECT_EQ(spec.discount, 0.99);
    PosgModel m = build_intersection(spec);
    EXPECT_GT(m.num_states, 18000u);
    EXPECT_EQ(m.num_states, 45u * 45u * 9u + 2u);
    EXPECT_TRUE(validate_model(m).ok());
}

TEST(Intersection, MinimumClearingTimeIsThree) {
    EXPECT_EQ(av_shortest_clear(7), 3);
    // The same length on the built dynamics with the HV standing still.
    IntersectionLayout l;
    PosgModel m = build_intersection();
    std::map<std::size_t, int> dist{{l.encode(l.initial()), 0}};
    std::deque<std::size_t> q{l.encode(l.initial())};
    int found = -1;
    while (!q.empty() && found < 0) {
        const std::size_t s = q.front();
        q.pop_front();
        for (std::size_t u = 0; u < kIntersectionActions && found < 0; ++u) {
            if (!m.legal_u(s, u)) continue;
            const std::size_t n = m.next_states(s, u, kSlow)[0].next;
            if (n == l.cleared_state()) found = dist[s] + 1;
            if (!l.is_terminal(n) && !dist.count(n)) {
                dist[n] = dist[s] + 1;
                q.push_back(n);
            }
        }
    }
    EXPECT_EQ(found, 3);
    EXPECT_EQ(l.min_clear_steps(), 3u);
    for (std::size_t n : {5u, 9u}) {
        IntersectionSpec spec;
        spec.size = n;
        EXPECT_EQ(IntersectionLayout(spec).min_clear_steps(), static_cast<std::size_t>(av_shortest_clear(int(n))));
    }
}

TEST(Intersection, BothSlowNeverCrashes) {
    IntersectionLayout l;
    PosgModel m = build_intersection();
    for (std::size_t s = 0; s < l.num_car_states(); ++s) {
        const auto st = l.decode(s);
        if (st.av.cell == st.hv.cell) continue;
        EXPECT_NE(m.next_states(s, kSlow, kSlow)[0].next, l.accident_state()) << s;
    }
}

TEST(Intersection, AccidentPredicateCases) {
    IntersectionLayout l;
    auto at = [&](Cell av, int sa, Cell hv, int sh) { return l.encode({{av, sa}, {hv, sh}}); };
    // Same destination cell.
    EXPECT_EQ(l.step(at({4, 3}, 1, {3, 2}, 1), kForward, kForward), l.accident_state());
    // Diagonal moves crossing between four cells.
    EXPECT_EQ(l.step(at({4, 2}, 1, {3, 2}, 1), kForwardRight, kForwardRight), l.accident_state());
    // Fast move through an occupied middle cell.
    EXPECT_EQ(l.step(at({5, 3}, 1, {4, 3}, 0), kFast, kSlow), l.accident_state());
    // Swapping cells.
    EXPECT_EQ(l.step(at({4, 3}, 1, {3, 3}, 1), kForward, kSlow), l.accident_state());
    // Disjoint motion is safe.
    const auto s = l.step(at({5, 3}, 1, {2, 1}, 1), kForward, kForward);
    EXPECT_FALSE(l.is_terminal(s));
    EXPECT_EQ(l.decode(s), (IntersectionState{{{4, 3}, 1}, {{2, 2}, 1}}));
}

TEST(Intersection, LegalityMatchesRules) {
    IntersectionLayout l;
    PosgModel m = build_intersection();
    const std::array<int, 5> speed{0, 1, 1, 1, 2};
    for (std::size_t s = 0; s < l.num_car_states(); s += 7) {
        const auto st = l.decode(s);
        for (std::size_t a = 0; a < kIntersectionActions; ++a) {
            const Cell d = IntersectionLayout::displacement(Seat::self, a);
            Cell to{std::max(0, st.av.cell.row + d.row), st.av.cell.col + d.col};
            const bool ok = std::abs(speed[a] - st.av.speed) <= 1 && l.passable(to);
            bool any = false;
            for (std::size_t b = 0; b < kIntersectionActions; ++b) {
                const Cell db = IntersectionLayout::displacement(Seat::self, b);
                Cell tb{std::max(0, st.av.cell.row + db.row), st.av.cell.col + db.col};
                any |= std::abs(speed[b] - st.av.speed) <= 1 && l.passable(tb);
            }
            EXPECT_EQ(m.legal_u(s, a), ok || (!any && a == kSlow)) << s << " " << a;
        }
    }
}

TEST(Intersection, RewardsPerStep) {
    IntersectionLayout l;
    PosgModel m = build_intersection();
    const std::size_t s0 = l.encode(l.initial());
    EXPECT_EQ(m.r(s0, kForward, kForward), -1.0);
    const std::size_t crash = l.encode({{{4, 3}, 1}, {{3, 2}, 1}});
    EXPECT_EQ(m.r(crash, kForward, kForward), -101.0);
    // By default the HV is modeled as a myopic accident avoider.
    EXPECT_EQ(m.opponent_reward(crash, kForward, kForward), -100.0);
    EXPECT_EQ(m.opponent_reward(s0, kForward, kForward), 0.0);
    EXPECT_EQ(m.counterpart_discount(), 0.0);
    EXPECT_EQ(m.r(l.cleared_state(), kSlow, kSlow), 0.0);
    EXPECT_EQ(m.initial_belief[s0], 1.0);

    IntersectionSpec spec;
    spec.hv_delay_cost = 1.0;
    spec.hv_discount = spec.discount;
    PosgModel with_delay = build_intersection(spec);
    EXPECT_EQ(with_delay.opponent_reward(crash, kForward, kForward), -101.0);
    EXPECT_EQ(with_delay.opponent_reward(s0, kForward, kForward), -1.0);
    EXPECT_FALSE(with_delay.discount_other.has_value());
}

TEST(Soccer, DefaultsAndValidation) {
    SoccerSpec spec;
    EXPECT_EQ(spec.discount, 0.9);
    EXPECT_EQ(spec.draw_probability, 0.1);
    EXPECT_EQ(spec.rows, 4);
    EXPECT_EQ(spec.cols, 5);
    PosgModel m = build_soccer(spec);
    EXPECT_TRUE(m.zero_sum);
    EXPECT_EQ(m.num_states, 20u * 19u * 2u + 3u);
    EXPECT_TRUE(validate_model(m).ok());
}

TEST(Soccer, EncodeDecodeRoundTrip) {
    SoccerLayout l;
    for (std::size_t s = 0; s < l.num_play_states(); ++s) {
        const auto st = l.decode(s);
        EXPECT_FALSE(st.a == st.b);
        EXPECT_EQ(l.encode(st), s);
    }
}

TEST(Soccer, OrderBranchesHalfEach) {
    SoccerLayout l;
    PosgModel m = build_soccer();
    // A steps left and B steps right into the same square: whoever moves
    // second bumps into the first and hands it the ball.
    const SoccerState st{{2, 3}, {2, 1}, Seat::self};
    const std::size_t s = l.encode(st);
    const std::size_t a_first = l.encode({{2, 2}, {2, 1}, Seat::self});
    const std::size_t b_first = l.encode({{2, 3}, {2, 2}, Seat::other});
    EXPECT_DOUBLE_EQ(prob_of(m, s, kLeft, kRight, a_first), 0.45);
    EXPECT_DOUBLE_EQ(prob_of(m, s, kLeft, kRight, b_first), 0.45);
    EXPECT_DOUBLE_EQ(prob_of(m, s, kLeft, kRight, l.draw_state()), 0.1);
    // From kickoff, non-interacting moves: both orders agree on one outcome.
    const std::size_t k = l.encode(l.initial(Seat::self));
    const std::size_t n = l.encode({{2, 2}, {1, 2}, Seat::self});
    EXPECT_DOUBLE_EQ(prob_of(m, k, kLeft, kRight, n), 0.9);
}

TEST(Soccer, CollisionTransfersBallAndCancelsMove) {
    SoccerLayout l;
    const SoccerState st{{2, 3}, {2, 2}, Seat::self};
    EXPECT_EQ(l.move(st, Seat::self, kLeft), l.encode({{2, 3}, {2, 2}, Seat::other}));
    // The defender bumping into the carrier leaves the ball where it is.
    EXPECT_EQ(l.move(st, Seat::other, kRight), l.encode(st));
}

TEST(Soccer, ScoringAndOwnGoals) {
    SoccerLayout l;
    PosgModel m = build_soccer();
    const std::size_t s = l.encode({{1, 0}, {3, 4}, Seat::self});
    EXPECT_DOUBLE_EQ(prob_of(m, s, kLeft, kStand, l.a_scored_state()), 0.9);
    EXPECT_DOUBLE_EQ(m.r(s, kLeft, kStand), 0.9);
    const std::size_t own = l.encode({{1, 4}, {3, 0}, Seat::self});
    EXPECT_DOUBLE_EQ(m.r(own, kRight, kStand), -0.9);
    // Off a non-goal row the move clamps to the edge.
    const std::size_t wall = l.encode({{0, 0}, {3, 4}, Seat::self});
    EXPECT_DOUBLE_EQ(prob_of(m, wall, kLeft, kStand, wall), 0.9);
}

TEST(Soccer, ZeroSumReflectionAudit) {
    SoccerLayout l;
    PosgModel m = build_soccer();
    for (std::size_t s = 0; s < l.num_play_states(); ++s) {
        const std::size_t rs = l.encode(reflect(l, l.decode(s)));
        for (std::size_t u = 0; u < kSoccerActions; ++u)
            for (std::size_t v = 0; v < kSoccerActions; ++v)
                ASSERT_NEAR(m.r(s, u, v) + m.r(rs, reflect_action(v), reflect_action(u)), 0.0, 1e-15);
    }
}

TEST(Soccer, ReachableStatesNeverShareSquares) {
    SoccerLayout l;
    PosgModel m = build_soccer();
    std::set<std::size_t> seen;
    std::deque<std::size_t> q;
    for (std::size_t s = 0; s < m.num_states; ++s)
        if (m.initial_belief[s] > 0) q.push_back(s), seen.insert(s);
    while (!q.empty()) {
        const std::size_t s = q.front();
        q.pop_front();
        if (l.is_terminal(s)) continue;
        const auto st = l.decode(s);
        ASSERT_FALSE(st.a == st.b);
        for (std::size_t u = 0; u < kSoccerActions; ++u)
            for (std::size_t v = 0; v < kSoccerActions; ++v)
                for (const auto& t : m.next_states(s, u, v))
                    if (seen.insert(t.next).second) q.push_back(t.next);
    }
    EXPECT_GT(seen.size(), 100u);
}

TEST(RandomPosg, PairModeMapping) {
    const auto d = designated_observations(10, 8, ObservationMode::unique_plus_pairs);
    EXPECT_EQ(d, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 6, 7, 7}));
    EXPECT_THROW(designated_observations(10, 4, ObservationMode::unique_plus_pairs), std::invalid_argument);
    EXPECT_THROW(designated_observations(10, 8, ObservationMode::all_unique), std::invalid_argument);
}

TEST(RandomPosg, AllUniquePeakRows) {
    RandomPosgSpec spec;
    spec.observations = 10;
    spec.mode = ObservationMode::all_unique;
    spec.seed = 3;
    PosgModel m = generate_random_posg(spec);
    EXPECT_TRUE(validate_model(m).ok());
    for (std::size_t s = 0; s < 10; ++s)
        for (std::size_t u = 0; u < 3; ++u) {
            EXPECT_GE(m.obs_prob(s, u, s), 0.8);
            for (std::size_t o = 0; o < 10; ++o)
                if (o != s) {
                    EXPECT_NEAR(m.obs_prob(s, u, o), 0.2 / 9.0, 1e-15);
                }
        }
    spec.peak = 0.7;
    EXPECT_THROW(generate_random_posg(spec), std::invalid_argument);
}

TEST(RandomPosg, DeterministicPerSeed) {
    RandomPosgSpec spec;
    spec.seed = 42;
    PosgModel a = generate_random_posg(spec), b = generate_random_posg(spec);
    EXPECT_TRUE(a.transition == b.transition);
    EXPECT_EQ(a.reward, b.reward);
    EXPECT_EQ(a.observation, b.observation);
    spec.seed = 43;
    EXPECT_NE(generate_random_posg(spec).reward, a.reward);
    for (double r : a.reward) {
        EXPECT_GE(r, -10.0);
        EXPECT_LE(r, 10.0);
    }
}

TEST(RandomPosg, EmpiricalPeakFrequency) {
    RandomPosgSpec spec;
    spec.seed = 5;
    PosgModel m = generate_random_posg(spec);
    const auto d = designated_observations(10, 8, spec.mode);
    Rng rng(99);
    const std::size_t draws = 100000;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < draws; ++i) {
        const std::size_t s = i % 10;
        std::vector<double> row(8);
        for (std::size_t o = 0; o < 8; ++o) row[o] = m.obs_prob(s, 0, o);
        hits += rng.categorical(row) == d[s];
    }
    EXPECT_NEAR(static_cast<double>(hits) / draws, 0.8, 0.02);
}
