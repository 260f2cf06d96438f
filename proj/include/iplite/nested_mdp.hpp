#pragma once

// Level-k nested MDP reasoning. An agent at level 0 plans against a
// uniformly random counterpart; at level k it plans against a weighted
// mixture of the counterpart's reasoning models at levels 0..k-1. Each
// reasoning model is uniform over the actions optimal at that level.

#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "iplite/core/parallel.hpp"
#include "iplite/core/text.hpp"
#include "iplite/model.hpp"

namespace iplite {

inline constexpr double kOptTolerance = 1e-9;

// q[s][a][b]: h-step value for the acting agent taking a while the
// counterpart takes b. `values` holds the per-state strategy-weighted maximum.
struct QTable {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::size_t num_counter_actions = 0;
    std::size_t horizon = 0;
    std::size_t level = 0;
    Seat agent = Seat::self;
    std::vector<double> q;
    std::vector<double> values;
    std::vector<std::uint8_t> legal;  // [s][a]; empty means all legal

    double operator()(std::size_t s, std::size_t a, std::size_t b) const {
        return q[(s * num_actions + a) * num_counter_actions + b];
    }
    bool is_legal(std::size_t s, std::size_t a) const { return legal.empty() || legal[s * num_actions + a] != 0; }

    // Σ_b strategy(s, b) q[s][a][b].
    double weighted(std::size_t s, std::size_t a, const StrategyTable& strategy) const {
        const double* row = q.data() + (s * num_actions + a) * num_counter_actions;
        double x = 0.0;
        for (std::size_t b = 0; b < num_counter_actions; ++b) x += strategy(s, b) * row[b];
        return x;
    }

    friend bool operator==(const QTable&, const QTable&) = default;
};

struct BackupResult {
    std::vector<double> q;
    std::vector<double> values;
};

namespace detail {

inline void require_strategy_shape(const StrategyTable& strategy, std::size_t states, std::size_t actions,
                                   const char* who) {
    if (strategy.num_states() != states || strategy.num_actions() != actions)
        throw std::invalid_argument(std::string(who) + ": strategy table has the wrong shape");
    strategy.require_normalized(who);
}

inline std::vector<std::uint8_t> legal_mask(const MdpView& view) {
    const PosgModel& m = view.model();
    return view.seat() == Seat::self ? m.legal_self : m.legal_other;
}

}  // namespace detail

// One Bellman backup against a fixed counterpart strategy:
//   q[s][a][b] = R(s,a,b) + φ Σ_{s'} T(s,a,b,s') prev(s')
//   value(s)   = max over legal a of Σ_b strategy(s,b) q[s][a][b]
inline BackupResult mdp_backup(const MdpView& view, const StrategyTable& strategy, std::span<const double> prev,
                               std::size_t workers = 1) {
    const std::size_t S = view.num_states(), A = view.num_actions(), B = view.num_counter_actions();
    detail::require_strategy_shape(strategy, S, B, "mdp_backup");
    if (prev.size() != S) throw std::invalid_argument("mdp_backup: previous values have the wrong size");
    const double phi = view.discount();
    BackupResult out;
    out.q.resize(S * A * B);
    out.values.resize(S);
    parallel_for(S, workers, [&](std::size_t s) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < A; ++a) {
            double weighted = 0.0;
            for (std::size_t b = 0; b < B; ++b) {
                double future = 0.0;
                for (const auto& t : view.next_states(s, a, b)) future += t.prob * prev[t.next];
                const double q = view.reward(s, a, b) + phi * future;
                out.q[(s * A + a) * B + b] = q;
                weighted += strategy(s, b) * q;
            }
            if (view.legal(s, a) && weighted > best) best = weighted;
        }
        out.values[s] = best;
    });
    return out;
}

// Runs exactly `horizon` backups from zero values.
inline QTable solve_mdp(const MdpView& view, const StrategyTable& strategy, std::size_t horizon,
                        std::size_t workers = 1) {
    if (horizon == 0) throw std::invalid_argument("solve_mdp: horizon must be at least 1");
    QTable table;
    table.num_states = view.num_states();
    table.num_actions = view.num_actions();
    table.num_counter_actions = view.num_counter_actions();
    table.horizon = horizon;
    table.agent = view.seat();
    table.legal = detail::legal_mask(view);
    std::vector<double> values(view.num_states(), 0.0);
    for (std::size_t h = 0; h < horizon; ++h) {
        BackupResult r = mdp_backup(view, strategy, values, workers);
        values = std::move(r.values);
        table.q = std::move(r.q);
    }
    table.values = std::move(values);
    return table;
}

// Horizon after which truncating an infinite discounted sum costs at most eps.
inline std::size_t horizon_for_epsilon(double eps, double discount, double reward_bound) {
    if (!(eps > 0.0) || !(discount > 0.0 && discount < 1.0))
        throw std::invalid_argument("horizon_for_epsilon: need eps > 0 and discount in (0, 1)");
    if (reward_bound <= 0.0) return 1;
    const double h = std::ceil(std::log(eps * (1.0 - discount) / reward_bound) / std::log(discount));
    return h < 1.0 ? 1 : static_cast<std::size_t>(h);
}

// Uniform over the legal actions whose strategy-weighted value is within
// tol of the best legal value.
inline StrategyTable reasoning_model_from_q(const QTable& q, const StrategyTable& strategy_below,
                                            double tol = kOptTolerance) {
    const std::size_t S = q.num_states, A = q.num_actions;
    std::vector<double> probs(S * A, 0.0);
    std::vector<double> w(A);
    for (std::size_t s = 0; s < S; ++s) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < A; ++a) {
            w[a] = q.weighted(s, a, strategy_below);
            if (q.is_legal(s, a) && w[a] > best) best = w[a];
        }
        std::size_t count = 0;
        for (std::size_t a = 0; a < A; ++a) count += q.is_legal(s, a) && w[a] >= best - tol;
        for (std::size_t a = 0; a < A; ++a)
            if (q.is_legal(s, a) && w[a] >= best - tol) probs[s * A + a] = 1.0 / static_cast<double>(count);
    }
    return StrategyTable(S, A, std::move(probs));
}

// Greedy legal actions under a counterpart strategy, lowest index first.
inline std::vector<std::size_t> optimal_actions(const QTable& q, const StrategyTable& strategy, std::size_t s,
                                                double tol = kOptTolerance) {
    std::vector<double> w(q.num_actions);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < q.num_actions; ++a) {
        w[a] = q.weighted(s, a, strategy);
        if (q.is_legal(s, a) && w[a] > best) best = w[a];
    }
    std::vector<std::size_t> out;
    for (std::size_t a = 0; a < q.num_actions; ++a)
        if (q.is_legal(s, a) && w[a] >= best - tol) out.push_back(a);
    return out;
}

// p(i) for a level-k agent: base weights truncated to 0..k-1 and rescaled.
// An empty base means uniform.
inline std::vector<double> level_weights_for(std::size_t k, const std::vector<double>& base) {
    std::vector<double> p(k, 1.0);
    if (!base.empty()) {
        if (base.size() < k) throw std::invalid_argument("level weights: need at least k entries");
        for (std::size_t i = 0; i < k; ++i) {
            if (!(base[i] >= 0.0)) throw std::invalid_argument("level weights must be nonnegative");
            p[i] = base[i];
        }
    }
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    if (k > 0 && !(total > 0.0)) throw std::invalid_argument("level weights sum to zero");
    for (auto& x : p) x /= total;
    return p;
}

struct LevelKey {
    Seat agent;
    std::size_t level;
    friend auto operator<=>(const LevelKey&, const LevelKey&) = default;
};

struct NestedPolicyStack {
    Seat agent = Seat::self;
    std::size_t level = 0;
    std::size_t horizon = 0;
    std::vector<double> base_weights;  // empty means uniform p(i)
    std::vector<double> level_weights;  // p(i), i < level, for the top agent
    // Reasoning models π^i for every (seat, level) solved along the way,
    // including the top agent at its own level.
    std::map<LevelKey, StrategyTable> reasoning;
    // Q-tables for every solved (seat, level); the top one is at (agent, level).
    std::map<LevelKey, QTable> q_tables;
    // Counterpart mixture the top-level agent planned against.
    StrategyTable predicted;

    const QTable& top() const { return q_tables.at({agent, level}); }
    const StrategyTable& policy() const { return reasoning.at({agent, level}); }
};

namespace detail {

inline StrategyTable mixture(const PosgModel& m, Seat counter, std::size_t k, const std::vector<double>& p,
                             const std::map<LevelKey, StrategyTable>& reasoning) {
    if (k == 0) return uniform_legal_strategy(m, counter);
    const StrategyTable* first = nullptr;
    std::vector<double> probs;
    for (std::size_t i = 0; i < k; ++i) {
        auto it = reasoning.find({counter, i});
        if (it == reasoning.end())
            throw std::invalid_argument("predict_mixed_strategy: missing reasoning model for level " +
                                        std::to_string(i));
        if (!first) {
            first = &it->second;
            probs.assign(first->data().size(), 0.0);
        }
        auto d = it->second.data();
        for (std::size_t j = 0; j < probs.size(); ++j) probs[j] += p[i] * d[j];
    }
    return StrategyTable(first->num_states(), first->num_actions(), std::move(probs));
}

class NestedSolver {
public:
    NestedSolver(const PosgModel& m, std::size_t horizon, std::vector<double> base_weights, std::size_t workers)
        : model_(m), horizon_(horizon), base_(std::move(base_weights)), workers_(workers) {}

    void solve(Seat agent, std::size_t level) {
        if (q_.count({agent, level})) return;
        const Seat counter = opposite(agent);
        for (std::size_t i = 0; i < level; ++i) solve(counter, i);
        StrategyTable strategy = strategy_for(agent, level);
        MdpView view(model_, agent);
        QTable q = solve_mdp(view, strategy, horizon_, workers_);
        q.level = level;
        reasoning_.emplace(LevelKey{agent, level}, reasoning_model_from_q(q, strategy));
        q_.emplace(LevelKey{agent, level}, std::move(q));
    }

    StrategyTable strategy_for(Seat agent, std::size_t level) const {
        return mixture(model_, opposite(agent), level, level_weights_for(level, base_), reasoning_);
    }

    std::map<LevelKey, StrategyTable> reasoning_;
    std::map<LevelKey, QTable> q_;

private:
    const PosgModel& model_;
    std::size_t horizon_;
    std::vector<double> base_;
    std::size_t workers_;
};

}  // namespace detail

// Solves the level-k nested MDP of `agent`, memoizing every (seat, level)
// sub-problem so each is solved once.
inline NestedPolicyStack solve_nested(const PosgModel& model, Seat agent, std::size_t k, std::size_t h,
                                      std::vector<double> base_weights = {}, std::size_t workers = 1) {
    if (h == 0) throw std::invalid_argument("solve_nested: horizon must be at least 1");
    require_valid(model);
    detail::NestedSolver solver(model, h, base_weights, workers);
    solver.solve(agent, k);
    NestedPolicyStack stack;
    stack.agent = agent;
    stack.level = k;
    stack.horizon = h;
    stack.base_weights = std::move(base_weights);
    stack.level_weights = level_weights_for(k, stack.base_weights);
    stack.predicted = solver.strategy_for(agent, k);
    stack.reasoning = std::move(solver.reasoning_);
    stack.q_tables = std::move(solver.q_);
    return stack;
}

// π̂^k of the stack agent's counterpart: uniform at k = 0, otherwise the
// p(i)-weighted mixture of the counterpart's reasoning models below k.
inline StrategyTable predict_mixed_strategy(const PosgModel& model, const NestedPolicyStack& stack, std::size_t k) {
    return detail::mixture(model, opposite(stack.agent), k, level_weights_for(k, stack.base_weights),
                           stack.reasoning);
}

// ---------------------------------------------------------------------------
// Text IO

inline constexpr int kNestedFormatVersion = 1;

namespace detail {

inline void write_table(std::ostream& out, std::span<const double> data, std::size_t width) {
    for (std::size_t i = 0; i < data.size(); i += width) {
        for (std::size_t k = 0; k < width; ++k) out << (k ? " " : "") << format_17g(data[i + k]);
        out << '\n';
    }
}

inline Seat parse_seat(const Token& t) {
    if (t.text == "self") return Seat::self;
    if (t.text == "other") return Seat::other;
    throw ParseError(t.line, "expected 'self' or 'other', found '" + t.text + "'");
}

}  // namespace detail

inline void write_nested(std::ostream& out, const NestedPolicyStack& stack) {
    out << "iplite-nested " << kNestedFormatVersion << '\n';
    out << "agent " << seat_name(stack.agent) << '\n';
    out << "level " << stack.level << '\n';
    out << "horizon " << stack.horizon << '\n';
    out << "weights " << stack.base_weights.size();
    for (double w : stack.base_weights) out << ' ' << format_17g(w);
    out << '\n';
    for (const auto& [key, table] : stack.reasoning) {
        out << "strategy " << seat_name(key.agent) << ' ' << key.level << ' ' << table.num_states() << ' '
            << table.num_actions() << '\n';
        detail::write_table(out, table.data(), table.num_actions());
    }
    for (const auto& [key, q] : stack.q_tables) {
        out << "q " << seat_name(key.agent) << ' ' << key.level << ' ' << q.num_states << ' ' << q.num_actions << ' '
            << q.num_counter_actions << ' ' << (q.legal.empty() ? 0 : 1) << '\n';
        detail::write_table(out, q.q, q.num_counter_actions);
        out << "values\n";
        detail::write_table(out, q.values, q.num_states);
        if (!q.legal.empty()) {
            out << "legal\n";
            for (std::size_t i = 0; i < q.legal.size(); ++i)
                out << int(q.legal[i]) << ((i + 1) % q.num_actions == 0 ? '\n' : ' ');
        }
    }
    out << "predicted " << stack.predicted.num_states() << ' ' << stack.predicted.num_actions() << '\n';
    detail::write_table(out, stack.predicted.data(), stack.predicted.num_actions());
    out << "end\n";
}

inline NestedPolicyStack read_nested(std::istream& in) {
    TokenStream ts(in);
    ts.expect("iplite-nested");
    if (ts.next_uint() != kNestedFormatVersion) throw ParseError(ts.line(), "unsupported nested format version");
    NestedPolicyStack stack;
    ts.expect("agent");
    stack.agent = detail::parse_seat(ts.next());
    ts.expect("level");
    stack.level = ts.next_uint();
    ts.expect("horizon");
    stack.horizon = ts.next_uint();
    ts.expect("weights");
    stack.base_weights.resize(ts.next_uint());
    for (auto& w : stack.base_weights) w = ts.next_double();
    stack.level_weights = level_weights_for(stack.level, stack.base_weights);

    auto read_vec = [&](std::size_t n) {
        std::vector<double> v(n);
        for (auto& x : v) x = ts.next_double();
        return v;
    };
    while (ts.peek().text == "strategy") {
        ts.next();
        LevelKey key{detail::parse_seat(ts.next()), static_cast<std::size_t>(ts.next_uint())};
        std::size_t S = ts.next_uint(), A = ts.next_uint();
        stack.reasoning.emplace(key, StrategyTable(S, A, read_vec(S * A)));
    }
    while (ts.peek().text == "q") {
        ts.next();
        QTable q;
        q.agent = detail::parse_seat(ts.next());
        q.level = ts.next_uint();
        q.horizon = stack.horizon;
        q.num_states = ts.next_uint();
        q.num_actions = ts.next_uint();
        q.num_counter_actions = ts.next_uint();
        const bool has_legal = ts.next_uint() != 0;
        q.q = read_vec(q.num_states * q.num_actions * q.num_counter_actions);
        ts.expect("values");
        q.values = read_vec(q.num_states);
        if (has_legal) {
            ts.expect("legal");
            q.legal.resize(q.num_states * q.num_actions);
            for (auto& x : q.legal) x = ts.next_uint() != 0;
        }
        stack.q_tables.emplace(LevelKey{q.agent, q.level}, std::move(q));
    }
    ts.expect("predicted");
    {
        std::size_t S = ts.next_uint(), A = ts.next_uint();
        stack.predicted = StrategyTable(S, A, read_vec(S * A));
    }
    ts.expect("end");
    if (!stack.q_tables.count({stack.agent, stack.level}) || !stack.reasoning.count({stack.agent, stack.level}))
        throw ParseError(ts.line(), "nested stack is missing its top level");
    return stack;
}

inline void save_nested(const std::string& path, const NestedPolicyStack& stack) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write policy file '" + path + "'");
    write_nested(out, stack);
}

inline NestedPolicyStack load_nested(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open policy file '" + path + "'");
    return read_nested(in);
}

}  // namespace iplite
