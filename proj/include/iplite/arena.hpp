#pragma once

// Seeded head-to-head simulation. Agent A plays the self seat and agent B
// the other seat. Each entry point is a pure function of its inputs and
// seed; tournaments write per-competition results into fixed slots so the
// worker count never changes the output.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "iplite/baselines.hpp"
#include "iplite/core/parallel.hpp"
#include "iplite/core/rng.hpp"
#include "iplite/core/stats.hpp"
#include "iplite/core/text.hpp"
#include "iplite/model.hpp"

namespace iplite {

// Seed streams inside one competition or episode.
enum SeedStream : std::uint64_t { kEnvStream = 0, kStreamA = 1, kStreamB = 2, kResetA = 3, kResetB = 4 };

struct CompetitionResult {
    std::uint64_t seed = 0;
    std::size_t stages = 0;
    double return_a = 0.0;
    double return_b = 0.0;
    double acting_ms_a = 0.0;  // wall clock, excluded from result files
    double acting_ms_b = 0.0;
};

namespace detail {

inline std::size_t sample_row(std::span<const Transition> row, Rng& rng) {
    double x = rng.uniform();
    for (const auto& t : row) {
        if (x < t.prob) return t.next;
        x -= t.prob;
    }
    return row.back().next;
}

inline std::size_t sample_observation(const PosgModel& m, Seat seat, std::size_t next, std::size_t a, Rng& rng) {
    if (seat == Seat::self) {
        std::vector<double> w(m.num_observations);
        for (std::size_t o = 0; o < w.size(); ++o) w[o] = m.obs_prob(next, a, o);
        return rng.categorical(w);
    }
    if (m.num_observations_other == 0) return 0;
    std::vector<double> w(m.num_observations_other);
    for (std::size_t o = 0; o < w.size(); ++o) w[o] = m.obs_prob_other(next, a, o);
    return rng.categorical(w);
}

inline void check_seats(const Agent& a, const Agent& b) {
    if (a.seat() != Seat::self) throw std::invalid_argument("agent A must play the self seat, got " + a.name());
    if (b.seat() != Seat::other) throw std::invalid_argument("agent B must play the other seat, got " + b.name());
}

// Rewards of one joint action for both seats.
inline std::pair<double, double> stage_rewards(const PosgModel& m, std::size_t s, std::size_t u, std::size_t v) {
    const double ra = m.r(s, u, v);
    const double rb = m.has_opponent_reward() ? m.opponent_reward(s, u, v) : 0.0;
    return {ra, rb};
}

inline void check_action(const PosgModel& m, Seat seat, std::size_t a, const Agent& who) {
    const std::size_t limit = seat == Seat::self ? m.num_actions_self : m.num_actions_other;
    if (a >= limit) throw std::out_of_range(who.name() + " chose action " + std::to_string(a) + " out of range");
}

}  // namespace detail

// Simulates `stages` steps from a state drawn from b0. Observations are
// drawn from each seat's own channel; full-observability agents read the
// true state from the step input instead.
inline CompetitionResult run_competition(const PosgModel& m, Agent& a, Agent& b, std::size_t stages,
                                         double stage_discount, std::uint64_t seed) {
    detail::check_seats(a, b);
    CompetitionResult out;
    out.seed = seed;
    out.stages = stages;
    Rng env(derive_seed(seed, kEnvStream)), ra(derive_seed(seed, kStreamA)), rb(derive_seed(seed, kStreamB));
    a.reset(derive_seed(seed, kResetA));
    b.reset(derive_seed(seed, kResetB));
    std::size_t s = env.categorical(m.initial_belief);
    double weight = 1.0;
    for (std::size_t t = 0; t < stages; ++t) {
        const StepInput in{s, t};
        auto t0 = std::chrono::steady_clock::now();
        const std::size_t u = a.act(in, ra);
        auto t1 = std::chrono::steady_clock::now();
        const std::size_t v = b.act(in, rb);
        auto t2 = std::chrono::steady_clock::now();
        detail::check_action(m, Seat::self, u, a);
        detail::check_action(m, Seat::other, v, b);
        const auto [r_a, r_b] = detail::stage_rewards(m, s, u, v);
        if (m.zero_sum && r_a + r_b != 0.0) throw std::logic_error("zero-sum audit failed");
        out.return_a += weight * r_a;
        out.return_b += weight * r_b;
        weight *= stage_discount;
        const std::size_t next = detail::sample_row(m.next_states(s, u, v), env);
        const std::size_t oa = detail::sample_observation(m, Seat::self, next, u, env);
        const std::size_t ob = detail::sample_observation(m, Seat::other, next, v, env);
        auto t3 = std::chrono::steady_clock::now();
        a.observe(u, v, oa);
        b.observe(v, u, ob);
        auto t4 = std::chrono::steady_clock::now();
        using ms = std::chrono::duration<double, std::milli>;
        out.acting_ms_a += ms(t1 - t0).count();
        out.acting_ms_b += ms(t2 - t1).count() + ms(t4 - t3).count();
        s = next;
    }
    return out;
}

struct TournamentResult {
    std::vector<CompetitionResult> competitions;
    MeanEstimate a;
    MeanEstimate b;
    double planning_ms_a = 0.0;
    double planning_ms_b = 0.0;
};

inline std::uint64_t competition_seed(std::uint64_t master, std::size_t index) {
    return derive_seed(master, 0x1000u + index);
}

// Runs n competitions on clones of the prototypes; competition i uses the
// seed derived from (seed, i) so growing n never perturbs earlier rows.
inline TournamentResult run_tournament(const PosgModel& m, const Agent& proto_a, const Agent& proto_b,
                                       std::size_t n, std::size_t stages, double stage_discount, std::uint64_t seed,
                                       std::size_t workers = 1) {
    if (n < 2) throw std::invalid_argument("a tournament needs at least 2 competitions");
    detail::check_seats(proto_a, proto_b);
    TournamentResult out;
    out.competitions.resize(n);
    parallel_for(n, workers, [&](std::size_t i) {
        auto a = proto_a.clone();
        auto b = proto_b.clone();
        out.competitions[i] = run_competition(m, *a, *b, stages, stage_discount, competition_seed(seed, i));
    });
    std::vector<double> xa(n), xb(n);
    for (std::size_t i = 0; i < n; ++i) {
        xa[i] = out.competitions[i].return_a;
        xb[i] = out.competitions[i].return_b;
    }
    out.a = estimate_mean(xa);
    out.b = estimate_mean(xb);
    out.planning_ms_a = proto_a.planning_ms();
    out.planning_ms_b = proto_b.planning_ms();
    return out;
}

// ---------------------------------------------------------------------------
// Intersection episodes

struct EpisodeRecord {
    std::uint64_t seed = 0;
    std::size_t steps = 0;
    bool cleared = false;
    bool accident = false;
};

struct MetricsRow {
    std::size_t t = 0;
    double T = 0.0;     // mean actions per non-accident episode
    std::size_t I = 0;  // accidents so far
    double R_d = 0.0;
    double R_c = 0.0;
    double M = 0.0;
};

struct IntersectionRun {
    std::vector<EpisodeRecord> episodes;
    std::vector<MetricsRow> series;
};

struct EpisodeCosts {
    double delay_cost = 1.0;
    double accident_cost = 100.0;
    double t_min = 3.0;
};

// Running metrics after each episode. Episodes that hit the step cap count
// toward T with their full length. Before any non-accident episode T is
// taken as T_min, so R_d starts at zero.
inline std::vector<MetricsRow> intersection_metrics(const std::vector<EpisodeRecord>& episodes,
                                                    const EpisodeCosts& costs) {
    std::vector<MetricsRow> out;
    out.reserve(episodes.size());
    std::size_t accidents = 0, finished = 0, actions = 0;
    for (std::size_t i = 0; i < episodes.size(); ++i) {
        const auto& e = episodes[i];
        if (e.accident) {
            ++accidents;
        } else {
            ++finished;
            actions += e.steps;
        }
        MetricsRow row;
        row.t = i + 1;
        row.T = finished ? static_cast<double>(actions) / static_cast<double>(finished) : costs.t_min;
        row.I = accidents;
        row.R_d = row.T / costs.t_min - 1.0;
        row.R_c = static_cast<double>(accidents) / static_cast<double>(row.t);
        row.M = costs.accident_cost * row.R_c + costs.delay_cost * row.R_d;
        out.push_back(row);
    }
    return out;
}

// Plays one episode from b0 until the AV clears, an accident happens, or
// max_steps actions have been taken.
inline EpisodeRecord run_episode(const PosgModel& m, std::size_t cleared_state, std::size_t accident_state,
                                 Agent& av, Agent& driver, std::uint64_t seed, std::size_t max_steps) {
    detail::check_seats(av, driver);
    EpisodeRecord rec;
    rec.seed = seed;
    Rng env(derive_seed(seed, kEnvStream)), ra(derive_seed(seed, kStreamA)), rb(derive_seed(seed, kStreamB));
    av.reset(derive_seed(seed, kResetA));
    driver.reset(derive_seed(seed, kResetB));
    std::size_t s = env.categorical(m.initial_belief);
    while (rec.steps < max_steps) {
        const StepInput in{s, rec.steps};
        const std::size_t u = av.act(in, ra);
        const std::size_t v = driver.act(in, rb);
        detail::check_action(m, Seat::self, u, av);
        detail::check_action(m, Seat::other, v, driver);
        const std::size_t next = detail::sample_row(m.next_states(s, u, v), env);
        const std::size_t oa = detail::sample_observation(m, Seat::self, next, u, env);
        const std::size_t ob = detail::sample_observation(m, Seat::other, next, v, env);
        av.observe(u, v, oa);
        driver.observe(v, u, ob);
        ++rec.steps;
        s = next;
        if (s == accident_state) {
            rec.accident = true;
            break;
        }
        if (s == cleared_state) {
            rec.cleared = true;
            break;
        }
    }
    return rec;
}

inline std::uint64_t episode_seed(std::uint64_t master, std::size_t index) { return derive_seed(master, 0x2000u + index); }

inline IntersectionRun run_intersection_episodes(const PosgModel& m, std::size_t cleared_state,
                                                 std::size_t accident_state, const Agent& av, const Agent& driver,
                                                 std::size_t n, std::uint64_t seed, const EpisodeCosts& costs = {},
                                                 std::size_t max_steps = 200, std::size_t workers = 1) {
    if (n == 0) throw std::invalid_argument("need at least one episode");
    IntersectionRun out;
    out.episodes.resize(n);
    parallel_for(n, workers, [&](std::size_t i) {
        auto a = av.clone();
        auto b = driver.clone();
        out.episodes[i] = run_episode(m, cleared_state, accident_state, *a, *b, episode_seed(seed, i), max_steps);
    });
    out.series = intersection_metrics(out.episodes, costs);
    return out;
}

// ---------------------------------------------------------------------------
// Soccer games

struct GameRecord {
    std::uint64_t seed = 0;
    std::size_t steps = 0;
    int outcome = 0;  // +1 A scored, -1 B scored, 0 draw or step cap
};

struct SoccerTally {
    std::vector<GameRecord> games;
    std::size_t a_goals = 0;
    std::size_t b_goals = 0;
    std::size_t draws = 0;
};

inline GameRecord run_soccer_game(const PosgModel& m, std::size_t a_scored, std::size_t b_scored,
                                  std::size_t draw_state, Agent& a, Agent& b, std::uint64_t seed,
                                  std::size_t max_steps) {
    detail::check_seats(a, b);
    GameRecord rec;
    rec.seed = seed;
    Rng env(derive_seed(seed, kEnvStream)), ra(derive_seed(seed, kStreamA)), rb(derive_seed(seed, kStreamB));
    a.reset(derive_seed(seed, kResetA));
    b.reset(derive_seed(seed, kResetB));
    std::size_t s = env.categorical(m.initial_belief);
    while (rec.steps < max_steps) {
        const StepInput in{s, rec.steps};
        const std::size_t u = a.act(in, ra);
        const std::size_t v = b.act(in, rb);
        detail::check_action(m, Seat::self, u, a);
        detail::check_action(m, Seat::other, v, b);
        s = detail::sample_row(m.next_states(s, u, v), env);
        a.observe(u, v, 0);
        b.observe(v, u, 0);
        ++rec.steps;
        if (s == a_scored) rec.outcome = 1;
        if (s == b_scored) rec.outcome = -1;
        if (s == a_scored || s == b_scored || s == draw_state) break;
    }
    return rec;
}

inline std::uint64_t game_seed(std::uint64_t master, std::size_t index) { return derive_seed(master, 0x3000u + index); }

// Plays games until `decisive` of them ended with a goal. Games are run in
// batches so the result does not depend on the worker count.
inline SoccerTally run_soccer_games(const PosgModel& m, std::size_t a_scored, std::size_t b_scored,
                                    std::size_t draw_state, const Agent& a, const Agent& b, std::size_t decisive,
                                    std::uint64_t seed, std::size_t max_steps = 1000, std::size_t workers = 1) {
    SoccerTally out;
    std::size_t next = 0;
    while (out.a_goals + out.b_goals < decisive) {
        const std::size_t need = decisive - out.a_goals - out.b_goals;
        const std::size_t batch = need + need / 4 + 8;
        std::vector<GameRecord> games(batch);
        parallel_for(batch, workers, [&](std::size_t i) {
            auto pa = a.clone();
            auto pb = b.clone();
            games[i] = run_soccer_game(m, a_scored, b_scored, draw_state, *pa, *pb, game_seed(seed, next + i), max_steps);
        });
        next += batch;
        for (const auto& g : games) {
            if (out.a_goals + out.b_goals == decisive) break;
            out.games.push_back(g);
            if (g.outcome > 0) ++out.a_goals;
            else if (g.outcome < 0) ++out.b_goals;
            else ++out.draws;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV output. Result files hold only seeded quantities so reruns are
// bit-identical; wall-clock timings go to separate files.

inline void write_competitions_csv(std::ostream& out, const TournamentResult& r) {
    out << "competition,seed,stages,return_a,return_b\n";
    for (std::size_t i = 0; i < r.competitions.size(); ++i) {
        const auto& c = r.competitions[i];
        out << i << ',' << c.seed << ',' << c.stages << ',' << format_17g(c.return_a) << ',' << format_17g(c.return_b)
            << '\n';
    }
    out << "summary,,," << format_17g(r.a.mean) << ',' << format_17g(r.b.mean) << '\n';
}

inline void write_summary_csv(std::ostream& out, const TournamentResult& r, const std::string& name_a,
                              const std::string& name_b) {
    out << "seat,agent,n,mean,halfwidth\n";
    out << "a," << csv_field(name_a) << ',' << r.a.n << ',' << format_17g(r.a.mean) << ',' << format_17g(r.a.halfwidth) << '\n';
    out << "b," << csv_field(name_b) << ',' << r.b.n << ',' << format_17g(r.b.mean) << ',' << format_17g(r.b.halfwidth) << '\n';
}

inline void write_timings_csv(std::ostream& out, const TournamentResult& r) {
    out << "competition,planning_ms_a,planning_ms_b,acting_ms_a,acting_ms_b\n";
    for (std::size_t i = 0; i < r.competitions.size(); ++i) {
        const auto& c = r.competitions[i];
        out << i << ',' << r.planning_ms_a << ',' << r.planning_ms_b << ',' << c.acting_ms_a << ',' << c.acting_ms_b
            << '\n';
    }
}

inline void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& series) {
    out << "t,T_t,I_t,R_d,R_c,M_t\n";
    for (const auto& m : series)
        out << m.t << ',' << format_17g(m.T) << ',' << m.I << ',' << format_17g(m.R_d) << ',' << format_17g(m.R_c)
            << ',' << format_17g(m.M) << '\n';
}

inline void write_episodes_csv(std::ostream& out, const std::vector<EpisodeRecord>& episodes) {
    out << "episode,seed,steps,cleared,accident\n";
    for (std::size_t i = 0; i < episodes.size(); ++i) {
        const auto& e = episodes[i];
        out << i << ',' << e.seed << ',' << e.steps << ',' << e.cleared << ',' << e.accident << '\n';
    }
}

inline void write_games_csv(std::ostream& out, const SoccerTally& t) {
    out << "game,seed,steps,outcome\n";
    for (std::size_t i = 0; i < t.games.size(); ++i)
        out << i << ',' << t.games[i].seed << ',' << t.games[i].steps << ',' << t.games[i].outcome << '\n';
}

inline void write_soccer_summary_csv(std::ostream& out, const SoccerTally& t, const std::string& name_a,
                                     const std::string& name_b) {
    out << "agent_a,agent_b,games,a_goals,b_goals,draws\n";
    out << csv_field(name_a) << ',' << csv_field(name_b) << ',' << t.games.size() << ',' << t.a_goals << ','
        << t.b_goals << ',' << t.draws << '\n';
}

}  // namespace iplite
