#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "iplite/environments/random_posg.hpp"
#include "iplite/model.hpp"
#include "iplite/model_io.hpp"

using namespace iplite;

namespace {

// Two states, two actions each, two observations; written out by hand.
PosgModel two_state_model() {
    PosgModel m;
    m.num_states = 2;
    m.num_actions_self = 2;
    m.num_actions_other = 2;
    m.num_observations = 2;
    m.discount = 0.9;
    const std::vector<std::vector<Transition>> rows{
        {{0, 1.0}}, {{1, 1.0}}, {{0, 0.5}, {1, 0.5}}, {{1, 1.0}},
        {{0, 0.25}, {1, 0.75}}, {{0, 1.0}}, {{1, 1.0}}, {{0, 1.0}},
    };
    for (const auto& r : rows) m.transition.push_row(r);
    m.observation = {0.8, 0.2, 0.5, 0.5, 0.1, 0.9, 0.5, 0.5};
    m.reward = {1, -1, 0, 2, -3, 0.5, 0.25, 4};
    m.initial_belief = {0.5, 0.5};
    return m;
}

}  // namespace

TEST(ValidateModel, WellFormedModelHasEmptyReport) {
    EXPECT_TRUE(validate_model(two_state_model()).ok());
}

TEST(ValidateModel, ReportsTransitionDeficit) {
    PosgModel m = two_state_model();
    PosgModel broken = m;
    broken.transition = TransitionTable();
    for (std::size_t r = 0; r < 8; ++r) {
        if (r == m.row_index(1, 0, 1)) {
            std::vector<Transition> row{{0, 0.9}};
            broken.transition.push_row(row);
        } else {
            broken.transition.push_row(m.transition.row(r));
        }
    }
    auto rep = validate_model(broken);
    ASSERT_EQ(rep.violations.size(), 1u);
    EXPECT_EQ(rep.violations[0].table, "T");
    EXPECT_EQ(rep.violations[0].index, (std::vector<std::size_t>{1, 0, 1}));
    EXPECT_NEAR(rep.violations[0].deficit, 0.1, 1e-12);
}

TEST(ValidateModel, ReportsObservationAndDiscountAndBelief) {
    PosgModel m = two_state_model();
    m.observation[0] = 0.7;
    m.discount = 1.0;
    m.initial_belief = {0.6, 0.6};
    auto rep = validate_model(m);
    std::vector<std::string> tables;
    for (auto& v : rep.violations) tables.push_back(v.table);
    EXPECT_EQ(tables, (std::vector<std::string>{"discount", "Z", "b0"}));
}

TEST(ValidateModel, GeneratedRandomModelsAreValid) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        RandomPosgSpec spec;
        spec.seed = seed;
        EXPECT_TRUE(validate_model(generate_random_posg(spec)).ok()) << "seed " << seed;
        spec.observations = 10;
        spec.mode = ObservationMode::all_unique;
        EXPECT_TRUE(validate_model(generate_random_posg(spec)).ok()) << "seed " << seed;
    }
}

TEST(BeliefDistance, Examples) {
    Belief a({0.7, 0.3}), b({0.5, 0.5});
    EXPECT_EQ(belief_l1_distance(a, a), 0.0);
    EXPECT_NEAR(belief_l1_distance(a, b), 0.4, 1e-15);
    EXPECT_EQ(belief_l1_distance(Belief::point_mass(3, 0), Belief::point_mass(3, 2)), 2.0);
    EXPECT_THROW(belief_l1_distance(a, Belief::uniform(3)), std::invalid_argument);
}

TEST(BeliefDistance, TriangleInequalityAndSymmetry) {
    Rng rng(11);
    auto draw = [&] {
        std::vector<double> w(5);
        for (auto& x : w) x = rng.uniform();
        return Belief::normalized(w);
    };
    for (int i = 0; i < 1000; ++i) {
        Belief a = draw(), b = draw(), c = draw();
        EXPECT_LE(belief_l1_distance(a, c), belief_l1_distance(a, b) + belief_l1_distance(b, c) + 1e-12);
        EXPECT_EQ(belief_l1_distance(a, b), belief_l1_distance(b, a));
    }
}

TEST(BeliefConstruction, RejectsNonDistributions) {
    EXPECT_THROW(Belief({0.5, 0.6}), std::invalid_argument);
    EXPECT_THROW(Belief({-0.1, 1.1}), std::invalid_argument);
    EXPECT_THROW(Belief::normalized({0.0, 0.0}), std::invalid_argument);
}

TEST(StrategyTable, NormalizationCheck) {
    StrategyTable ok(2, 2, {0.5, 0.5, 1.0, 0.0});
    EXPECT_NO_THROW(ok.require_normalized("test"));
    StrategyTable bad(2, 2, {0.5, 0.5, 0.7, 0.0});
    EXPECT_EQ(bad.first_unnormalized(), 1u);
    EXPECT_THROW(bad.require_normalized("test"), std::invalid_argument);
}

TEST(MdpView, OtherSeatSeesNegatedRewardAndSwappedActions) {
    PosgModel m = two_state_model();
    MdpView self(m, Seat::self), other(m, Seat::other);
    for (std::size_t s = 0; s < 2; ++s)
        for (std::size_t u = 0; u < 2; ++u)
            for (std::size_t v = 0; v < 2; ++v) {
                EXPECT_EQ(self.reward(s, u, v), m.r(s, u, v));
                EXPECT_EQ(other.reward(s, v, u), -m.r(s, u, v));
                auto a = self.next_states(s, u, v);
                auto b = other.next_states(s, v, u);
                EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin(), b.end()));
            }
}

TEST(OpponentView, TwiceIsIdentityWhenBothChannelsExist) {
    RandomPosgSpec spec;
    spec.seed = 5;
    PosgModel m = generate_random_posg(spec);
    PosgModel back = opponent_view(opponent_view(m));
    EXPECT_EQ(model_to_string(back), model_to_string(m));
    EXPECT_TRUE(validate_model(opponent_view(m)).ok());
}

TEST(ModelIo, RoundTripIsBitExactOnText) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        RandomPosgSpec spec;
        spec.seed = seed;
        const std::string text = model_to_string(generate_random_posg(spec));
        EXPECT_EQ(model_to_string(model_from_string(text)), text);
    }
    const std::string text = model_to_string(two_state_model());
    EXPECT_EQ(model_to_string(model_from_string(text)), text);
}

TEST(ModelIo, CounterpartDiscountRoundTrips) {
    PosgModel m = two_state_model();
    m.discount_other = 0.0;
    const std::string text = model_to_string(m);
    ASSERT_NE(text.find("discount_other 0\n"), std::string::npos);
    PosgModel back = model_from_string(text);
    ASSERT_TRUE(back.discount_other.has_value());
    EXPECT_EQ(*back.discount_other, 0.0);
    EXPECT_EQ(model_to_string(back), text);
    EXPECT_EQ(MdpView(back, Seat::other).discount(), 0.0);
    EXPECT_EQ(MdpView(back, Seat::self).discount(), 0.9);
    EXPECT_EQ(opponent_view(back).discount, 0.0);
    EXPECT_EQ(opponent_view(back).discount_other, 0.9);

    std::string bad = text;
    bad.replace(bad.find("discount_other 0"), 16, "discount_other 1");
    EXPECT_THROW(model_from_string(bad), ParseError);
    EXPECT_FALSE(two_state_model().discount_other.has_value());
    EXPECT_EQ(model_to_string(two_state_model()).find("discount_other"), std::string::npos);
}

TEST(ModelIo, RoundTripPreservesValues) {
    RandomPosgSpec spec;
    spec.seed = 3;
    PosgModel m = generate_random_posg(spec);
    PosgModel back = model_from_string(model_to_string(m));
    EXPECT_EQ(back.reward, m.reward);
    EXPECT_EQ(back.observation, m.observation);
    EXPECT_EQ(back.transition, m.transition);
}

TEST(ModelIo, SparseSectionRoundTrips) {
    const std::string text =
        "iplite-model 1\nstates 2\nactions_self 1\nactions_other 1\nobservations 1\ndiscount 0.5\nzero_sum 1\n"
        "T sparse 3\n0 0 0 1 1\n1 0 0 0 0.25\n1 0 0 1 0.75\nZ\n1\n1\nR\n1\n-1\nb0\n1 0\nend\n";
    PosgModel m = model_from_string(text);
    ASSERT_EQ(m.next_states(1, 0, 0).size(), 2u);
    EXPECT_EQ(m.next_states(1, 0, 0)[1].prob, 0.75);
}

TEST(ModelIo, SmallDeficitIsRenormalized) {
    std::string text = model_to_string(two_state_model());
    auto pos = text.find("0.8 0.2");
    ASSERT_NE(pos, std::string::npos);
    text.replace(pos, 7, "0.8 0.1999996");
    PosgModel m = model_from_string(text);
    EXPECT_NEAR(m.obs_prob(0, 0, 0) + m.obs_prob(0, 0, 1), 1.0, 1e-15);
    EXPECT_GT(m.obs_prob(0, 0, 0), 0.8);
}

TEST(ModelIo, LargeDeficitIsRejectedWithLine) {
    std::string text = model_to_string(two_state_model());
    auto pos = text.find("0.8 0.2");
    text.replace(pos, 7, "0.8 0.1");
    // Count the line of the corrupted row.
    std::size_t line = 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + pos, '\n'));
    try {
        model_from_string(text);
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), line);
    }
}

TEST(ModelIo, RejectsBadHeader) {
    EXPECT_THROW(model_from_string("iplite-model 2\n"), ParseError);
    EXPECT_THROW(model_from_string("something-else 1\n"), ParseError);
    EXPECT_THROW(model_from_string("iplite-model 1\nstates x\n"), ParseError);
}
