#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "iplite/agent_spec.hpp"
#include "iplite/arena.hpp"
#include "iplite/baselines.hpp"
#include "iplite/environments/random_posg.hpp"

using namespace iplite;

namespace {

PosgModel one_state_game(std::vector<double> payoff, std::size_t rows, std::size_t cols) {
    PosgModel m;
    m.num_states = 1;
    m.num_actions_self = rows;
    m.num_actions_other = cols;
    m.num_observations = 1;
    m.discount = 0.5;
    for (std::size_t i = 0; i < rows * cols; ++i) {
        std::vector<Transition> row{{0, 1.0}};
        m.transition.push_row(row);
    }
    m.observation.assign(rows, 1.0);
    m.reward = std::move(payoff);
    m.initial_belief = {1.0};
    return m;
}

// min over the column simplex of the best row response, on a fine grid.
double grid_game_value(const std::vector<double>& a) {
    const int n = 1000;
    double best = 1e300;
    for (int i = 0; i <= n; ++i)
        for (int j = 0; i + j <= n; ++j) {
            const double y[3] = {double(i) / n, double(j) / n, double(n - i - j) / n};
            double worst = -1e300;
            for (int r = 0; r < 3; ++r) worst = std::max(worst, a[r * 3] * y[0] + a[r * 3 + 1] * y[1] + a[r * 3 + 2] * y[2]);
            best = std::min(best, worst);
        }
    return best;
}

void expect_distribution_over_legal(const PosgModel& m, Seat seat, std::size_t s, const std::vector<double>& p) {
    double total = 0.0;
    for (std::size_t a = 0; a < p.size(); ++a) {
        EXPECT_GE(p[a], 0.0);
        if (!seat_legal(m, seat, s, a)) {
            EXPECT_EQ(p[a], 0.0) << "state " << s << " action " << a;
        }
        total += p[a];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
}

// Records the actions of a wrapped agent.
class Recorder : public Agent {
public:
    Recorder(std::unique_ptr<Agent> inner, std::vector<std::size_t>* log) : inner_(std::move(inner)), log_(log) {}
    std::unique_ptr<Agent> clone() const override { return std::make_unique<Recorder>(inner_->clone(), log_); }
    std::string name() const override { return inner_->name(); }
    Seat seat() const override { return inner_->seat(); }
    void reset(std::uint64_t seed) override { inner_->reset(seed); }
    std::size_t act(const StepInput& in, Rng& rng) override {
        const std::size_t a = inner_->act(in, rng);
        log_->push_back(a);
        return a;
    }
    void observe(std::size_t own, std::size_t counter, std::size_t obs) override { inner_->observe(own, counter, obs); }

private:
    std::unique_ptr<Agent> inner_;
    std::vector<std::size_t>* log_;
};

PosgModel random_game(std::uint64_t seed) {
    RandomPosgSpec spec;
    spec.states = 6;
    spec.observations = 4;
    spec.seed = seed;
    return generate_random_posg(spec);
}

}  // namespace

TEST(RandomPolicy, UniformOverLegal) {
    PosgModel m = one_state_game(std::vector<double>(25, 0.0), 5, 5);
    for (double p : random_policy(m, Seat::self, 0)) EXPECT_DOUBLE_EQ(p, 0.2);
    m.legal_self = {0, 0, 1, 0, 0};
    auto p = random_policy(m, Seat::self, 0);
    EXPECT_EQ(p, (std::vector<double>{0, 0, 1, 0, 0}));
}

TEST(RandomPolicy, IntersectionSpeedTwoUsesSpeedCompatibleActions) {
    IntersectionLayout l;
    PosgModel m = build_intersection();
    const std::size_t s = l.encode({{{4, 3}, 2}, {{3, 0}, 1}});
    // Speeds 1 and 2 are reachable from 2; all of their moves stay on the grid.
    const std::vector<std::size_t> expected{kForwardRight, kForwardLeft, kForward, kFast};
    auto p = random_policy(m, Seat::self, s);
    for (std::size_t a = 0; a < kIntersectionActions; ++a) {
        const bool in = std::find(expected.begin(), expected.end(), a) != expected.end();
        EXPECT_DOUBLE_EQ(p[a], in ? 0.25 : 0.0) << a;
    }
}

TEST(Maximin, MatchingPennies) {
    PosgModel m = one_state_game({1, -1, -1, 1}, 2, 2);
    auto r = maximin_policy(m, 20);
    EXPECT_NEAR(r.self(0, 0), 0.5, 1e-12);
    EXPECT_NEAR(r.other(0, 0), 0.5, 1e-12);
    EXPECT_NEAR(r.values[0], 0.0, 1e-12);
}

TEST(Maximin, DominantRowIsPure) {
    PosgModel m = one_state_game({3, 2, 1, 0}, 2, 2);
    auto r = maximin_policy(m, 1);
    EXPECT_DOUBLE_EQ(r.self(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(r.values[0], 2.0);
}

TEST(Maximin, RandomStageGamesMatchGridSearch) {
    Rng rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> a(9);
        for (auto& x : a) x = rng.uniform(-1, 1);
        const auto sol = solve_matrix_game(a, 3, 3);
        EXPECT_NEAR(sol.value, grid_game_value(a), 1e-3);
        // Exchangeability: the two security strategies meet at the value.
        double xy = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) xy += sol.row[i] * a[i * 3 + j] * sol.col[j];
        EXPECT_NEAR(xy, sol.value, 1e-3);
        EXPECT_LE(sol.gap, 1e-4);
    }
}

TEST(Maximin, RejectsGeneralSum) {
    PosgModel m = build_intersection({5});
    EXPECT_THROW(maximin_policy(m, 1), std::invalid_argument);
}

TEST(Maximin, SoccerStrategiesAreLegalDistributions) {
    PosgModel m = build_soccer();
    auto r = maximin_policy(m, 30);
    EXPECT_LE(r.max_gap, 1e-4);
    EXPECT_EQ(r.self.first_unnormalized(), m.num_states);
    EXPECT_EQ(r.other.first_unnormalized(), m.num_states);
    // Security values of a zero-sum scoring game stay inside [-1, 1].
    for (double v : r.values) {
        EXPECT_LE(v, 1.0 + 1e-9);
        EXPECT_GE(v, -1.0 - 1e-9);
    }
}

TEST(Handbuilt, ClearTrackMeansForward) {
    SoccerLayout l;
    auto p = handbuilt_soccer_policy(l, {{2, 3}, {0, 0}, Seat::self}, Seat::self);
    EXPECT_EQ(p[kLeft], 1.0);
    auto q = handbuilt_soccer_policy(l, {{0, 4}, {1, 1}, Seat::other}, Seat::other);
    EXPECT_EQ(q[kRight], 1.0);
}

TEST(Handbuilt, DefenderOnSameRowStandsStill) {
    SoccerLayout l;
    // B carries the ball toward the right; A is ahead of it on its row.
    auto p = handbuilt_soccer_policy(l, {{1, 3}, {1, 1}, Seat::other}, Seat::self);
    EXPECT_EQ(p[kStand], 1.0);
    // Ahead but on another row: align with the attacker.
    auto q = handbuilt_soccer_policy(l, {{3, 3}, {1, 1}, Seat::other}, Seat::self);
    EXPECT_EQ(q[kUp], 1.0);
    // Left behind: chase in the attacker's direction.
    auto r = handbuilt_soccer_policy(l, {{1, 0}, {1, 2}, Seat::other}, Seat::self);
    EXPECT_EQ(r[kRight], 1.0);
}

TEST(Handbuilt, OffTrackWithDefenderFarAheadHeadsForTrack) {
    SoccerLayout l;
    // A off-track on row 0 with the defender three columns ahead.
    auto p = handbuilt_soccer_policy(l, {{0, 4}, {1, 1}, Seat::self}, Seat::self);
    EXPECT_EQ(p[kDown], 1.0);
    // Defender close ahead: mix forward and track switching by distance.
    auto q = handbuilt_soccer_policy(l, {{3, 4}, {2, 3}, Seat::self}, Seat::self);
    EXPECT_NEAR(q[kLeft], 2.0 / 5.0, 1e-15);
    EXPECT_NEAR(q[kUp], 3.0 / 5.0, 1e-15);
}

TEST(Handbuilt, BlockedOnTrackMixes) {
    SoccerLayout l;
    HandbuiltParams params;
    auto p = handbuilt_soccer_policy(l, {{1, 3}, {1, 1}, Seat::self}, Seat::self, params);
    const double q = 2.0 / 5.0;
    EXPECT_NEAR(p[kLeft], q, 1e-15);
    EXPECT_NEAR(p[kStand], (1 - q) * 0.1, 1e-15);
    EXPECT_NEAR(p[kUp], (1 - q) * 0.45, 1e-15);
    EXPECT_NEAR(p[kDown], (1 - q) * 0.45, 1e-15);
}

TEST(Handbuilt, EveryStateGivesDistribution) {
    SoccerLayout l;
    PosgModel m = build_soccer();
    for (std::size_t s = 0; s < l.num_play_states(); ++s)
        for (Seat seat : {Seat::self, Seat::other})
            expect_distribution_over_legal(m, seat, s, handbuilt_soccer_policy(l, l.decode(s), seat));
}

TEST(Driver, AccidentFreeMeansUniform) {
    IntersectionLayout l;
    PosgModel m = build_intersection();
    // Cars far apart: no joint action can collide.
    const std::size_t s = l.encode({{{6, 3}, 1}, {{1, 0}, 1}});
    auto p = scripted_driver_policy(m, l.accident_state(), s);
    std::size_t legal = 0;
    for (std::size_t v = 0; v < 5; ++v) legal += m.legal_v(s, v);
    for (std::size_t v = 0; v < 5; ++v) EXPECT_NEAR(p[v], m.legal_v(s, v) ? 1.0 / legal : 0.0, 1e-15);
}

TEST(Driver, RiskMatchesJointActionEnumeration) {
    IntersectionLayout l;
    PosgModel m = build_intersection();
    // AV two rows below the HV's row, one column to the right.
    const std::size_t s = l.encode({{{5, 3}, 1}, {{3, 2}, 1}});
    auto risk = driver_accident_risk(m, l.accident_state(), s);
    const auto st = l.decode(s);
    for (std::size_t v = 0; v < 5; ++v) {
        std::size_t crashes = 0, legal = 0;
        for (std::size_t u = 0; u < 5; ++u) {
            if (!l.legal(Seat::self, st.av, u)) continue;
            ++legal;
            crashes += l.step(s, u, v) == l.accident_state();
        }
        EXPECT_DOUBLE_EQ(risk[v], double(crashes) / double(legal)) << v;
    }
    // Some HV move must be risky here for the check to carry weight.
    EXPECT_GT(*std::max_element(risk.begin(), risk.end()), 0.0);
}

TEST(Driver, LowTemperatureConcentratesOnSafestAction) {
    IntersectionLayout l;
    PosgModel m = build_intersection();
    const std::size_t s = l.encode({{{5, 3}, 1}, {{3, 2}, 1}});
    auto risk = driver_accident_risk(m, l.accident_state(), s);
    auto p = scripted_driver_policy(m, l.accident_state(), s, 1e-4);
    double lowest = 1e9;
    for (std::size_t v = 0; v < 5; ++v)
        if (m.legal_v(s, v)) lowest = std::min(lowest, risk[v]);
    double mass = 0.0;
    for (std::size_t v = 0; v < 5; ++v)
        if (m.legal_v(s, v) && risk[v] == lowest) mass += p[v];
    EXPECT_NEAR(mass, 1.0, 1e-9);
    EXPECT_THROW(scripted_driver_policy(m, l.accident_state(), s, 0.0), std::invalid_argument);
}

TEST(Driver, EveryStateGivesDistribution) {
    IntersectionLayout l;
    PosgModel m = build_intersection();
    for (std::size_t s = 0; s < m.num_states; s += 13) {
        expect_distribution_over_legal(m, Seat::other, s, scripted_driver_policy(m, l.accident_state(), s));
        expect_distribution_over_legal(m, Seat::self, s, random_policy(m, Seat::self, s));
    }
}

TEST(Hybrid, ExtremesReproducePureOpponents) {
    auto m = std::make_shared<const PosgModel>(random_game(11));
    AgentContext ctx{m, Seat::other, 5, 1, {}, {}, {}};
    ctx.defaults.pomdp_horizon = 3;
    ctx.defaults.beliefs = 20;
    ctx.defaults.mdp_horizon = 10;
    RandomAgent a(m, Seat::self);
    auto run = [&](const std::string& spec) {
        std::vector<std::size_t> log;
        Recorder b(make_agent(spec, ctx), &log);
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            RandomAgent aa = a;
            run_competition(*m, aa, b, 30, 0.95, seed);
        }
        return log;
    };
    EXPECT_EQ(run("hybrid:p=1"), run("mdp"));
    EXPECT_EQ(run("hybrid:p=0"), run("pomdp"));
}

TEST(Hybrid, BranchFrequency) {
    auto m = std::make_shared<const PosgModel>(random_game(12));
    AgentContext ctx{m, Seat::other, 5, 1, {}, {}, {}};
    ctx.defaults.pomdp_horizon = 2;
    ctx.defaults.beliefs = 10;
    ctx.defaults.mdp_horizon = 5;
    auto agent = make_agent("hybrid:p=0.5", ctx);
    auto* hybrid = dynamic_cast<HybridAgent*>(agent.get());
    ASSERT_NE(hybrid, nullptr);
    RandomAgent a(m, Seat::self);
    run_competition(*m, a, *hybrid, 10000, 1.0, 3);
    EXPECT_EQ(hybrid->steps(), 10000u);
    EXPECT_NEAR(double(hybrid->mdp_steps()) / 10000.0, 0.5, 0.02);
}

TEST(Hybrid, RejectsBadProbability) {
    auto m = std::make_shared<const PosgModel>(random_game(13));
    AgentContext ctx{m, Seat::other, 5, 1, {}, {}, {}};
    ctx.defaults.pomdp_horizon = 1;
    ctx.defaults.beliefs = 2;
    ctx.defaults.mdp_horizon = 1;
    EXPECT_THROW(make_agent("hybrid:p=1.5", ctx), std::invalid_argument);
}

TEST(RobustUpdate, FallsBackOnImpossibleBranch) {
    PosgModel m = random_game(14);
    // Counterpart predicted to never play action 2.
    std::vector<double> probs;
    for (std::size_t s = 0; s < m.num_states; ++s) probs.insert(probs.end(), {0.5, 0.5, 0.0});
    StrategyTable pi(m.num_states, 3, probs);
    Belief b = Belief::uniform(m.num_states);
    EXPECT_EQ(joint_obs_prob(m, pi, b, 0, 2, 0), 0.0);
    Belief next = robust_belief_update(m, pi, b, 0, 2, 0);
    double total = 0.0;
    for (std::size_t s = 0; s < m.num_states; ++s) total += next[s];
    EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(AgentSpecGrammar, ParsesAndRejects) {
    auto s = parse_agent_spec("ipomdp-lite:k=2,h=10,B=100");
    EXPECT_EQ(s.kind, "ipomdp-lite");
    EXPECT_EQ(s.count("k", 0), 2u);
    EXPECT_EQ(s.count("B", 0), 100u);
    EXPECT_EQ(s.to_string(), "ipomdp-lite:B=100,h=10,k=2");
    EXPECT_EQ(parse_agent_spec("random").params.size(), 0u);
    EXPECT_DOUBLE_EQ(parse_agent_spec("driver:temp=0.25").number("temp", 0), 0.25);
    EXPECT_THROW(parse_agent_spec("ninja"), std::invalid_argument);
    EXPECT_THROW(parse_agent_spec("mdp:k=1"), std::invalid_argument);
    EXPECT_THROW(parse_agent_spec("pomdp:h"), std::invalid_argument);
    EXPECT_THROW(parse_agent_spec("pomdp:h=1,h=2"), std::invalid_argument);
    EXPECT_THROW(parse_agent_spec("pomdp:h=x").count("h", 0), std::invalid_argument);
}

TEST(AgentSpecGrammar, EnvironmentSpecificAgentsNeedTheirEnvironment) {
    auto m = std::make_shared<const PosgModel>(random_game(15));
    AgentContext ctx{m, Seat::other, 5, 1, {}, {}, {}};
    EXPECT_THROW(make_agent("handbuilt", ctx), std::invalid_argument);
    EXPECT_THROW(make_agent("driver", ctx), std::invalid_argument);
    ctx.seat = Seat::self;
    EXPECT_THROW(make_agent("maximin:h=0", ctx), std::invalid_argument);
    EXPECT_EQ(make_agent("nested-mdp:k=2,h=3", ctx)->name(), "nested-mdp:k=2");
}
