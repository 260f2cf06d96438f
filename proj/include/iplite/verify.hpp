#pragma once

// Empirical checks of the solver's analytical guarantees on small models:
// an exact belief-tree expectimax, the prediction error between two
// strategy tables, the policy-loss bound, the level-0 MDP versus POMDP
// value gap on nearly deterministic models, and per-sweep contraction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "iplite/core/parallel.hpp"
#include "iplite/core/rng.hpp"
#include "iplite/core/stats.hpp"
#include "iplite/core/text.hpp"
#include "iplite/environments/random_posg.hpp"
#include "iplite/ipomdp_lite.hpp"
#include "iplite/model.hpp"
#include "iplite/nested_mdp.hpp"

namespace iplite {

inline constexpr double kOracleLeafLimit = 1e6;

// ---------------------------------------------------------------------------
// Reports

struct BoundRow {
    std::size_t trial = 0;
    double param = 0.0;  // family parameter of the trial (eps_p, eps, or sweep index)
    double measured = 0.0;
    double bound = 0.0;
    bool pass = false;

    double slack() const { return bound - measured; }
};

struct BoundReport {
    std::string name;
    double tolerance = 0.0;
    std::vector<BoundRow> rows;

    void add(std::size_t trial, double param, double measured, double bound) {
        rows.push_back({trial, param, measured, bound, measured <= bound + tolerance});
    }

    std::size_t passed() const {
        return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const BoundRow& r) { return r.pass; }));
    }

    bool all_pass() const { return passed() == rows.size(); }

    double min_slack() const {
        double x = std::numeric_limits<double>::infinity();
        for (const auto& r : rows) x = std::min(x, r.slack());
        return x;
    }
};

inline void write_bound_report_csv(std::ostream& out, const BoundReport& report) {
    out << "trial,param,measured,bound,slack,pass\n";
    for (const auto& r : report.rows)
        out << r.trial << ',' << format_17g(r.param) << ',' << format_17g(r.measured) << ',' << format_17g(r.bound)
            << ',' << format_17g(r.slack()) << ',' << (r.pass ? 1 : 0) << '\n';
}

inline void save_bound_report_csv(const std::string& path, const BoundReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_bound_report_csv(out, report);
}

// ---------------------------------------------------------------------------
// Exact belief-tree expectimax

namespace detail {

inline void require_enumerable(const PosgModel& m, std::size_t h) {
    const double branching = static_cast<double>(m.num_actions_self * m.num_actions_other * m.num_observations);
    const double leaves = std::pow(branching, static_cast<double>(h));
    if (leaves > kOracleLeafLimit)
        throw std::length_error("expectimax oracle: " + format_shortest(leaves) + " leaves exceed the limit of " +
                                format_shortest(kOracleLeafLimit));
}

inline double expectimax_rec(const PosgModel& m, const StrategyTable& strategy, const Belief& b, std::size_t h,
                             std::vector<double>* q_out) {
    if (h == 0) return 0.0;
    double best = -std::numeric_limits<double>::infinity();
    if (q_out) q_out->assign(m.num_actions_self, 0.0);
    for (std::size_t u = 0; u < m.num_actions_self; ++u) {
        double x = expected_payoff(m, strategy, b, u);
        if (h > 1) {
            for (std::size_t v = 0; v < m.num_actions_other; ++v)
                for (std::size_t o = 0; o < m.num_observations; ++o) {
                    const double p = joint_obs_prob(m, strategy, b, u, v, o);
                    if (!(p > 0.0)) continue;
                    x += m.discount * p * expectimax_rec(m, strategy, belief_update(m, strategy, b, u, v, o), h - 1,
                                                         nullptr);
                }
        }
        if (q_out) (*q_out)[u] = x;
        best = std::max(best, x);
    }
    return best;
}

}  // namespace detail

// Optimal h-step value at b against a fixed counterpart strategy, by full
// enumeration of the (u, v, o) tree.
inline double expectimax_oracle(const PosgModel& m, const StrategyTable& strategy, const Belief& b, std::size_t h) {
    detail::check_planner_inputs(m, strategy, b);
    detail::require_enumerable(m, h);
    return detail::expectimax_rec(m, strategy, b, h, nullptr);
}

// Q_h(b, u) for every u: immediate payoff plus the discounted (h-1)-step
// optimal continuation.
inline std::vector<double> expectimax_q(const PosgModel& m, const StrategyTable& strategy, const Belief& b,
                                        std::size_t h) {
    if (h == 0) throw std::invalid_argument("expectimax_q: horizon must be at least 1");
    detail::check_planner_inputs(m, strategy, b);
    detail::require_enumerable(m, h);
    std::vector<double> q;
    detail::expectimax_rec(m, strategy, b, h, &q);
    return q;
}

// Planner value at b0 with B = every belief reachable within h - 1 steps
// against the oracle, on `models` seeded tiny models with |S| in 2..4,
// |U| = |V| = |O| = 2 and h in 1..4. One row per model, measured = |gap|.
inline BoundReport check_oracle_equivalence(std::size_t models, std::uint64_t seed, double tolerance = 1e-6) {
    BoundReport report;
    report.name = "oracle_equivalence";
    report.tolerance = tolerance;
    for (std::size_t i = 0; i < models; ++i) {
        TinyModelSpec spec;
        spec.states = 2 + i % 3;
        spec.seed = derive_seed(seed, i);
        const PosgModel m = generate_tiny_model(spec);
        Rng rng(derive_seed(seed, 0x100000u + i));
        const StrategyTable pi = random_strategy(m.num_states, m.num_actions_other, rng);
        const std::size_t h = 1 + i % 4;
        const ValueFunction vf = run_sweeps(m, pi, reachable_beliefs(m, pi, h - 1), h);
        const Belief b0(m.initial_belief);
        report.add(i, static_cast<double>(h), std::abs(vf.value_of(b0) - expectimax_oracle(m, pi, b0, h)), 0.0);
    }
    return report;
}

// Two unpruned exact backups from the zero function: the counts must be
// |U| and then |U| * |U|^(|V||O|). measured = |count - expected|.
inline BoundReport check_alpha_growth(const PosgModel& m, const StrategyTable& strategy) {
    BoundReport report;
    report.name = "alpha_growth";
    const std::size_t U = m.num_actions_self, V = m.num_actions_other, O = m.num_observations;
    const ValueFunction one = exact_backup(ValueFunction::zero(m.num_states), strategy, m);
    const ValueFunction two = exact_backup(one, strategy, m);
    const double expected_one = static_cast<double>(U);
    const double expected_two = static_cast<double>(exact_backup_count(U, U, V, O));
    report.add(1, expected_one, std::abs(static_cast<double>(one.vectors.size()) - expected_one), 0.0);
    report.add(2, expected_two, std::abs(static_cast<double>(two.vectors.size()) - expected_two), 0.0);
    return report;
}

// ---------------------------------------------------------------------------
// Prediction error

inline double prediction_error(const StrategyTable& truth, const StrategyTable& predicted) {
    if (truth.num_states() != predicted.num_states() || truth.num_actions() != predicted.num_actions())
        throw std::invalid_argument("prediction_error: strategy tables differ in shape");
    double e = 0.0;
    const auto a = truth.data(), b = predicted.data();
    for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
    return e;
}

// ---------------------------------------------------------------------------
// Policy loss

// The constant multiplying eps_p in the policy-loss bound.
inline double policy_loss_constant(std::size_t num_counter_actions, std::size_t num_observations, double reward_max,
                                   double discount, std::size_t n) {
    const double phi = discount;
    const double tail = (1.0 / (1.0 - phi)) * (1.0 + 3.0 * phi * static_cast<double>(num_observations) / (1.0 - phi));
    const double head = n == 0 ? 0.0 : std::pow(phi, static_cast<double>(n - 1));
    return 2.0 * static_cast<double>(num_counter_actions) * reward_max * (head + tail);
}

// Expected n-step return from b when the counterpart plays `truth`, our
// agent picks argmax_u Q_m(b, u) computed against `predicted` with m steps
// to go (lowest index on ties), and beliefs follow the true update.
inline double induced_policy_return(const PosgModel& m, const StrategyTable& truth, const StrategyTable& predicted,
                                    const Belief& b, std::size_t n) {
    if (n == 0) return 0.0;
    const auto q = expectimax_q(m, predicted, b, n);
    const auto u = static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
    double x = expected_payoff(m, truth, b, u);
    if (n == 1) return x;
    for (std::size_t v = 0; v < m.num_actions_other; ++v)
        for (std::size_t o = 0; o < m.num_observations; ++o) {
            const double p = joint_obs_prob(m, truth, b, u, v, o);
            if (!(p > 0.0)) continue;
            x += m.discount * p * induced_policy_return(m, truth, predicted, belief_update(m, truth, b, u, v, o), n - 1);
        }
    return x;
}

struct PolicyLossOptions {
    std::size_t eval_beliefs = 4;  // random beliefs per trial besides b0
    std::size_t workers = 1;
};

// Each trial draws a true strategy and a prediction mixed toward another
// random table by a random weight (weight 0 on trial 0), then measures the
// worst J*_n - J_n over b0 and a few random beliefs.
inline BoundReport check_policy_loss_bound(const PosgModel& m, std::size_t n, std::size_t trials, std::uint64_t seed,
                                           const PolicyLossOptions& options = {}) {
    require_valid(m);
    if (n == 0) throw std::invalid_argument("check_policy_loss_bound: horizon must be at least 1");
    detail::require_enumerable(m, n);
    BoundReport report;
    report.name = "policy_loss";
    report.tolerance = 1e-6;
    const double r_max = m.reward_bound();
    const double constant = policy_loss_constant(m.num_actions_other, m.num_observations, r_max, m.discount, n);
    std::vector<BoundRow> rows(trials);
    parallel_for(trials, options.workers, [&](std::size_t t) {
        Rng rng(derive_seed(seed, t));
        const StrategyTable truth = random_strategy(m.num_states, m.num_actions_other, rng);
        const StrategyTable other = random_strategy(m.num_states, m.num_actions_other, rng);
        const double w = t == 0 ? 0.0 : rng.uniform();
        std::vector<double> p(truth.data().begin(), truth.data().end());
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = (1.0 - w) * p[i] + w * other.data()[i];
        const StrategyTable predicted(m.num_states, m.num_actions_other, std::move(p));
        const double eps = prediction_error(truth, predicted);

        std::vector<Belief> points{Belief(m.initial_belief)};
        for (std::size_t i = 0; i < options.eval_beliefs; ++i)
            points.push_back(Belief(detail::dirichlet_row(rng, m.num_states)));
        double loss = 0.0;
        for (const auto& b : points) {
            const double best = expectimax_oracle(m, truth, b, n);
            const double got = induced_policy_return(m, truth, predicted, b, n);
            loss = std::max(loss, best - got);
        }
        const double bound = eps * constant;
        rows[t] = {t, eps, loss, bound, loss <= bound + report.tolerance};
    });
    report.rows = std::move(rows);
    return report;
}

// ---------------------------------------------------------------------------
// Level-0 MDP versus POMDP value gap

struct GapFamilySpec {
    std::size_t states = 3;
    std::size_t actions = 2;  // |U| = |V|
    std::size_t horizon = 3;
    double discount = 0.9;
    double reward_lo = -1.0;
    double reward_hi = 1.0;
};

// A zero-sum model where every (s, u, v) has a designated successor with
// probability 1 - eps/2 and every state emits its own observation with
// probability 1 - eps/2, for both agents. The seed fixes the rewards and
// designated successors, so models on an eps grid differ only in eps.
inline PosgModel near_deterministic_model(const GapFamilySpec& spec, double eps, std::uint64_t seed) {
    if (!(eps >= 0.0 && eps < 1.0)) throw std::invalid_argument("near_deterministic_model: eps must lie in [0, 1)");
    if (spec.states < 2 || spec.actions == 0)
        throw std::invalid_argument("near_deterministic_model: need at least two states and one action");
    const std::size_t S = spec.states, A = spec.actions;
    PosgModel m;
    m.num_states = S;
    m.num_actions_self = A;
    m.num_actions_other = A;
    m.num_observations = S;
    m.num_observations_other = S;
    m.discount = spec.discount;
    m.zero_sum = true;
    Rng rng(seed);
    const double peak = 1.0 - eps / 2.0;
    const double rest = (eps / 2.0) / static_cast<double>(S - 1);
    std::vector<Transition> row;
    for (std::size_t r = 0; r < S * A * A; ++r) {
        const std::size_t target = rng.below(S);
        row.clear();
        for (std::size_t n = 0; n < S; ++n) {
            const double p = n == target ? peak : rest;
            if (p > 0.0) row.push_back({n, p});
        }
        m.transition.push_row(row);
    }
    m.reward.resize(S * A * A);
    for (auto& x : m.reward) x = rng.uniform(spec.reward_lo, spec.reward_hi);
    m.observation.resize(S * A * S);
    for (std::size_t n = 0; n < S; ++n)
        for (std::size_t a = 0; a < A; ++a)
            for (std::size_t o = 0; o < S; ++o) m.observation[(n * A + a) * S + o] = o == n ? peak : rest;
    m.observation_other = m.observation;
    m.initial_belief.assign(S, 1.0 / static_cast<double>(S));
    return m;
}

// max over (s, v) of | mean_u Q^{0,n}(s, v, u) - Q^n(b_s, v) | for the
// counterpart, where b_s puts 1 - eps on s and spreads eps over the rest.
inline double level0_value_gap(const PosgModel& m, double eps, std::size_t n) {
    const std::size_t S = m.num_states, U = m.num_actions_self, V = m.num_actions_other;
    const QTable q = solve_mdp(MdpView(m, Seat::other), StrategyTable::uniform(S, U), n);
    const PosgModel counter = opponent_view(m);
    const StrategyTable uniform_self = StrategyTable::uniform(S, U);
    double gap = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        std::vector<double> b(S, eps / static_cast<double>(S - 1));
        b[s] = 1.0 - eps;
        const auto pomdp_q = expectimax_q(counter, uniform_self, Belief(b), n);
        for (std::size_t v = 0; v < V; ++v) {
            double mean = 0.0;
            for (std::size_t u = 0; u < U; ++u) mean += q(s, v, u);
            mean /= static_cast<double>(U);
            gap = std::max(gap, std::abs(mean - pomdp_q[v]));
        }
    }
    return gap;
}

struct GapSeriesReport {
    BoundReport bounds;      // one row per eps; bound = eps * cap_factor * (R_max - R_min) / (1 - phi)
    double fitted_slope = 0.0;     // least-squares gap / eps through the origin
    double fitted_constant = 0.0;  // slope in units of (R_max - R_min) / (1 - phi)
    bool zero_gap_ok = true;       // gap <= 1e-6 wherever eps == 0
    bool monotone = true;          // gap nondecreasing along the grid

    bool ok() const { return zero_gap_ok && monotone; }
};

inline GapSeriesReport check_level0_gap(const std::vector<double>& eps_grid, const GapFamilySpec& spec,
                                        std::uint64_t seed, double cap_factor = 10.0) {
    GapSeriesReport out;
    out.bounds.name = "level0_gap";
    out.bounds.tolerance = 1e-6;
    std::vector<double> gaps;
    double scale = 0.0;
    for (std::size_t i = 0; i < eps_grid.size(); ++i) {
        const double eps = eps_grid[i];
        const PosgModel m = near_deterministic_model(spec, eps, seed);
        scale = (m.reward_max() - m.reward_min()) / (1.0 - m.discount);
        const double gap = level0_value_gap(m, eps, spec.horizon);
        gaps.push_back(gap);
        out.bounds.add(i, eps, gap, eps * cap_factor * scale);
        if (eps == 0.0 && gap > 1e-6) out.zero_gap_ok = false;
        if (i > 0 && eps_grid[i] >= eps_grid[i - 1] && gap + 1e-12 < gaps[i - 1]) out.monotone = false;
    }
    out.fitted_slope = fit_through_origin(eps_grid, gaps);
    out.fitted_constant = scale > 0.0 ? out.fitted_slope / scale : 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// Contraction

struct ContractionOptions {
    std::size_t beliefs = 200;
    std::size_t proxy_sweeps = 500;
    std::size_t workers = 1;
};

// Distance to a long-run value function over the belief set,
// max_b |V_proxy(b) - V_n(b)|, for n = 0..n_sweeps, plus one row per sweep
// asserting err_{n+1} <= phi * err_n. The proxy sits within
// phi^sweeps * R_max / (1 - phi) of the limit, which enters the tolerance
// once for each side of the inequality.
inline BoundReport check_contraction(const PosgModel& m, const StrategyTable& strategy, std::size_t n_sweeps,
                                     std::uint64_t seed, const ContractionOptions& options = {}) {
    require_valid(m);
    const auto points = sample_beliefs(m, strategy, options.beliefs, seed).points;
    const ValueFunction proxy = run_sweeps(m, strategy, points, options.proxy_sweeps, options.workers);
    const double phi = m.discount;
    const double residual = std::pow(phi, static_cast<double>(options.proxy_sweeps)) * m.reward_bound() / (1.0 - phi);
    auto distance = [&](const ValueFunction& vf) {
        double d = 0.0;
        for (const auto& b : points) d = std::max(d, std::abs(proxy.value_of(b) - vf.value_of(b)));
        return d;
    };
    BoundReport report;
    report.name = "contraction";
    report.tolerance = (1.0 + phi) * residual + 1e-9;
    ValueFunction vf = ValueFunction::zero(m.num_states);
    double err = distance(vf);
    for (std::size_t n = 0; n < n_sweeps; ++n) {
        vf = pbvi_backup(vf, points, strategy, m, options.workers);
        const double next = distance(vf);
        report.add(n, static_cast<double>(n), next, phi * err);
        err = next;
    }
    return report;
}

}  // namespace iplite
