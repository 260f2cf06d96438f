#pragma once

// Seeded random zero-sum games. Transition rows are flat-Dirichlet draws,
// rewards are uniform on [reward_lo, reward_hi]. Observations are mostly
// informative: every state (or disjoint state pair) has one designated
// observation emitted with the peak probability.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "iplite/core/rng.hpp"
#include "iplite/model.hpp"

namespace iplite {

enum class ObservationMode { unique_plus_pairs, all_unique };

inline const char* observation_mode_name(ObservationMode m) {
    return m == ObservationMode::all_unique ? "all-unique" : "six-unique-plus-pairs";
}

inline ObservationMode parse_observation_mode(const std::string& s) {
    if (s == "all-unique") return ObservationMode::all_unique;
    if (s == "six-unique-plus-pairs" || s == "unique-plus-pairs") return ObservationMode::unique_plus_pairs;
    throw std::invalid_argument("unknown observation mode '" + s + "'");
}

struct RandomPosgSpec {
    std::size_t states = 10;
    std::size_t actions = 3;  // |U| = |V|
    std::size_t observations = 8;
    double peak = 0.8;
    ObservationMode mode = ObservationMode::unique_plus_pairs;
    double reward_lo = -10.0;
    double reward_hi = 10.0;
    double discount = 0.95;
    std::uint64_t seed = 0;
};

// Designated observation per state. In pair mode the first 2|O| - |S|
// states get their own observation and the rest share one per pair.
inline std::vector<std::size_t> designated_observations(std::size_t states, std::size_t observations,
                                                        ObservationMode mode) {
    std::vector<std::size_t> out(states);
    if (mode == ObservationMode::all_unique) {
        if (observations != states)
            throw std::invalid_argument("all-unique mode needs as many observations as states");
        for (std::size_t s = 0; s < states; ++s) out[s] = s;
        return out;
    }
    if (!(observations < states && states <= 2 * observations))
        throw std::invalid_argument("pair mode needs |O| < |S| <= 2|O|");
    const std::size_t unique = 2 * observations - states;
    for (std::size_t s = 0; s < states; ++s) out[s] = s < unique ? s : unique + (s - unique) / 2;
    return out;
}

namespace detail {

inline std::vector<double> dirichlet_row(Rng& rng, std::size_t n) {
    std::vector<double> w(n);
    double total = 0.0;
    for (auto& x : w) {
        x = -std::log(1.0 - rng.uniform());
        total += x;
    }
    for (auto& x : w) x /= total;
    return w;
}

inline void fill_random_transitions(PosgModel& m, Rng& rng) {
    const std::size_t rows = m.num_states * m.num_actions_self * m.num_actions_other;
    m.transition.reserve(rows, rows * m.num_states);
    std::vector<Transition> row;
    for (std::size_t r = 0; r < rows; ++r) {
        auto p = dirichlet_row(rng, m.num_states);
        row.clear();
        for (std::size_t n = 0; n < m.num_states; ++n) row.push_back({n, p[n]});
        m.transition.push_row(row);
    }
}

inline std::vector<double> peaked_observation_table(std::size_t states, std::size_t actions,
                                                    std::size_t observations, const std::vector<std::size_t>& target,
                                                    double peak) {
    std::vector<double> z(states * actions * observations);
    const double rest = observations > 1 ? (1.0 - peak) / static_cast<double>(observations - 1) : 0.0;
    for (std::size_t s = 0; s < states; ++s)
        for (std::size_t a = 0; a < actions; ++a)
            for (std::size_t o = 0; o < observations; ++o)
                z[(s * actions + a) * observations + o] = observations == 1 ? 1.0 : (o == target[s] ? peak : rest);
    return z;
}

}  // namespace detail

inline PosgModel generate_random_posg(const RandomPosgSpec& spec) {
    if (spec.states == 0 || spec.actions == 0 || spec.observations == 0)
        throw std::invalid_argument("random POSG dimensions must be positive");
    if (!(spec.peak >= 0.0 && spec.peak <= 1.0)) throw std::invalid_argument("peak probability must lie in [0, 1]");
    if (spec.mode == ObservationMode::all_unique && spec.peak < 0.8)
        throw std::invalid_argument("all-unique mode requires peak >= 0.8");
    const auto target = designated_observations(spec.states, spec.observations, spec.mode);

    PosgModel m;
    m.num_states = spec.states;
    m.num_actions_self = spec.actions;
    m.num_actions_other = spec.actions;
    m.num_observations = spec.observations;
    m.num_observations_other = spec.observations;
    m.discount = spec.discount;
    m.zero_sum = true;

    Rng rng(spec.seed);
    detail::fill_random_transitions(m, rng);
    m.reward.resize(spec.states * spec.actions * spec.actions);
    for (auto& r : m.reward) r = rng.uniform(spec.reward_lo, spec.reward_hi);
    m.observation = detail::peaked_observation_table(spec.states, spec.actions, spec.observations, target, spec.peak);
    m.observation_other = m.observation;
    m.initial_belief.assign(spec.states, 1.0 / static_cast<double>(spec.states));
    return m;
}

// Fully random small models for property tests and bound checks: every
// table is drawn from the seed, observation rows included.
struct TinyModelSpec {
    std::size_t states = 3;
    std::size_t actions_self = 2;
    std::size_t actions_other = 2;
    std::size_t observations = 2;
    double reward_lo = -1.0;
    double reward_hi = 1.0;
    double discount = 0.9;
    bool random_initial_belief = true;
    std::uint64_t seed = 0;
};

inline PosgModel generate_tiny_model(const TinyModelSpec& spec) {
    PosgModel m;
    m.num_states = spec.states;
    m.num_actions_self = spec.actions_self;
    m.num_actions_other = spec.actions_other;
    m.num_observations = spec.observations;
    m.discount = spec.discount;
    m.zero_sum = true;
    Rng rng(spec.seed);
    detail::fill_random_transitions(m, rng);
    m.observation.reserve(spec.states * spec.actions_self * spec.observations);
    for (std::size_t i = 0; i < spec.states * spec.actions_self; ++i) {
        auto row = detail::dirichlet_row(rng, spec.observations);
        m.observation.insert(m.observation.end(), row.begin(), row.end());
    }
    m.reward.resize(spec.states * spec.actions_self * spec.actions_other);
    for (auto& r : m.reward) r = rng.uniform(spec.reward_lo, spec.reward_hi);
    m.initial_belief = spec.random_initial_belief ? detail::dirichlet_row(rng, spec.states)
                                                  : std::vector<double>(spec.states, 1.0 / double(spec.states));
    return m;
}

// Random strategy table with strictly positive rows.
inline StrategyTable random_strategy(std::size_t states, std::size_t actions, Rng& rng) {
    std::vector<double> p;
    p.reserve(states * actions);
    for (std::size_t s = 0; s < states; ++s) {
        auto row = detail::dirichlet_row(rng, actions);
        p.insert(p.end(), row.begin(), row.end());
    }
    return StrategyTable(states, actions, std::move(p));
}

}  // namespace iplite
