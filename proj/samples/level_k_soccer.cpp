// Plays level-0 and level-1 nested MDP agents against the hand-built soccer
// opponent and reports the goal tallies.

#include <cstddef>
#include <iostream>
#include <memory>

#include "iplite/agent_spec.hpp"
#include "iplite/arena.hpp"
#include "iplite/environments/soccer.hpp"

int main() {
    const iplite::SoccerLayout layout;
    auto model = std::make_shared<const iplite::PosgModel>(iplite::build_soccer());

    iplite::AgentContext other;
    other.model = model;
    other.seat = iplite::Seat::other;
    other.soccer = layout;
    const auto opponent = iplite::make_agent("handbuilt", other);

    for (std::size_t k = 0; k <= 1; ++k) {
        iplite::AgentContext self;
        self.model = model;
        self.seat = iplite::Seat::self;
        const auto agent = iplite::make_agent("nested-mdp:k=" + std::to_string(k) + ",h=20", self);
        const auto tally = iplite::run_soccer_games(*model, layout.a_scored_state(), layout.b_scored_state(),
                                                    layout.draw_state(), *agent, *opponent, 1000, 42);
        std::cout << "k=" << k << "  goals for " << tally.a_goals << "  against " << tally.b_goals << "  draws "
                  << tally.draws << '\n';
    }
    return 0;
}
