// Pits an I-POMDP Lite agent against a level-0 MDP agent on a random POSG
// and prints the mean discounted return of each side.

#include <iostream>
#include <memory>

#include "iplite/agent_spec.hpp"
#include "iplite/arena.hpp"
#include "iplite/environments/random_posg.hpp"

int main() {
    iplite::RandomPosgSpec spec;
    spec.seed = 1;
    auto model = std::make_shared<const iplite::PosgModel>(iplite::generate_random_posg(spec));

    iplite::AgentContext self;
    self.model = model;
    self.seed = 11;
    iplite::AgentContext other = self;
    other.seat = iplite::Seat::other;
    other.seed = 12;
    const auto lite = iplite::make_agent("ipomdp-lite:k=1,h=5,B=50", self);
    const auto mdp = iplite::make_agent("mdp", other);

    const auto r = iplite::run_tournament(*model, *lite, *mdp, 200, 40, 0.95, 3);
    std::cout << lite->name() << "  " << r.a.mean << " +/- " << r.a.halfwidth << '\n'
              << mdp->name() << "  " << r.b.mean << " +/- " << r.b.halfwidth << '\n';
    return 0;
}
