#pragma once

// Partially observable planner over physical states. The counterpart's
// behaviour enters only through a fixed strategy table Pr(v|s), so beliefs
// live on S alone and value functions are sets of alpha-vectors over S.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "iplite/core/parallel.hpp"
#include "iplite/core/rng.hpp"
#include "iplite/core/text.hpp"
#include "iplite/model.hpp"

namespace iplite {

inline constexpr double kBeliefDedupThreshold = 1e-6;
inline constexpr double kVectorDuplicateTolerance = 1e-12;

class ImpossibleObservation : public std::domain_error {
public:
    ImpossibleObservation(std::size_t u, std::size_t v, std::size_t o)
        : std::domain_error("impossible observation: (u=" + std::to_string(u) + ", v=" + std::to_string(v) +
                            ", o=" + std::to_string(o) + ") has zero probability") {}
};

namespace detail {

inline void check_planner_inputs(const PosgModel& m, const StrategyTable& strategy, const Belief& b) {
    if (b.size() != m.num_states) throw std::invalid_argument("belief dimension does not match the model");
    if (strategy.num_states() != m.num_states || strategy.num_actions() != m.num_actions_other)
        throw std::invalid_argument("strategy table does not match the model");
}

}  // namespace detail

// Σ_{s,v} R(s,u,v) Pr(v|s) b(s).
inline double expected_payoff(const PosgModel& m, const StrategyTable& strategy, const Belief& b, std::size_t u) {
    detail::check_planner_inputs(m, strategy, b);
    double x = 0.0;
    for (std::size_t s = 0; s < m.num_states; ++s) {
        if (b[s] == 0.0) continue;
        double inner = 0.0;
        for (std::size_t v = 0; v < m.num_actions_other; ++v) inner += m.r(s, u, v) * strategy(s, v);
        x += inner * b[s];
    }
    return x;
}

// τ(s') = Σ_s T(s,u,v,s') Pr(v|s) b(s); the pre-observation image of b.
inline std::vector<double> propagate(const PosgModel& m, const StrategyTable& strategy, const Belief& b,
                                     std::size_t u, std::size_t v) {
    std::vector<double> tau(m.num_states, 0.0);
    for (std::size_t s = 0; s < m.num_states; ++s) {
        const double w = strategy(s, v) * b[s];
        if (w == 0.0) continue;
        for (const auto& t : m.next_states(s, u, v)) tau[t.next] += t.prob * w;
    }
    return tau;
}

// Pr(v, o | b, u) = Σ_{s'} Z(s',u,o) τ(s').
inline double joint_obs_prob(const PosgModel& m, const StrategyTable& strategy, const Belief& b, std::size_t u,
                             std::size_t v, std::size_t o) {
    detail::check_planner_inputs(m, strategy, b);
    auto tau = propagate(m, strategy, b, u, v);
    double x = 0.0;
    for (std::size_t n = 0; n < m.num_states; ++n) x += m.obs_prob(n, u, o) * tau[n];
    return x;
}

inline Belief belief_update(const PosgModel& m, const StrategyTable& strategy, const Belief& b, std::size_t u,
                            std::size_t v, std::size_t o) {
    detail::check_planner_inputs(m, strategy, b);
    auto tau = propagate(m, strategy, b, u, v);
    double total = 0.0;
    for (std::size_t n = 0; n < m.num_states; ++n) {
        tau[n] *= m.obs_prob(n, u, o);
        total += tau[n];
    }
    if (!(total > 0.0)) throw ImpossibleObservation(u, v, o);
    for (auto& x : tau) x /= total;
    return Belief(std::move(tau));
}

// ---------------------------------------------------------------------------
// Alpha-vector value functions

struct AlphaVector {
    std::vector<double> weights;
    std::size_t action = 0;

    friend bool operator==(const AlphaVector&, const AlphaVector&) = default;
};

struct ValueFunction {
    std::vector<AlphaVector> vectors;
    std::size_t horizon = 0;
    std::vector<Belief> beliefs;  // backing points; empty for exact backups

    static ValueFunction zero(std::size_t num_states) {
        ValueFunction vf;
        vf.vectors.push_back({std::vector<double>(num_states, 0.0), 0});
        return vf;
    }

    std::size_t best_index(const Belief& b) const {
        if (vectors.empty()) throw std::logic_error("value function has no vectors");
        std::size_t best = 0;
        double best_value = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < vectors.size(); ++i) {
            const double x = dot(vectors[i].weights, b.probs());
            if (x > best_value) {
                best_value = x;
                best = i;
            }
        }
        return best;
    }

    double value_of(const Belief& b) const { return dot(vectors[best_index(b)].weights, b.probs()); }
};

// Γ^{u,*}(s) = Σ_v Pr(v|s) R(s,u,v).
inline std::vector<double> payoff_vector(const PosgModel& m, const StrategyTable& strategy, std::size_t u) {
    std::vector<double> g(m.num_states, 0.0);
    for (std::size_t s = 0; s < m.num_states; ++s)
        for (std::size_t v = 0; v < m.num_actions_other; ++v) g[s] += strategy(s, v) * m.r(s, u, v);
    return g;
}

// Γ^{u,v,o}_i(s) = φ Pr(v|s) Σ_{s'} Z(s',u,o) T(s,u,v,s') α_i(s'), laid out
// as [((u V + v) O + o) N + i][s].
class ProjectionSet {
public:
    ProjectionSet(const PosgModel& m, const StrategyTable& strategy, const ValueFunction& vf, std::size_t workers)
        : U_(m.num_actions_self), V_(m.num_actions_other), O_(m.num_observations), N_(vf.vectors.size()),
          S_(m.num_states) {
        data_.assign(U_ * V_ * O_ * N_ * S_, 0.0);
        parallel_for(U_ * V_, workers, [&](std::size_t uv) {
            const std::size_t u = uv / V_, v = uv % V_;
            for (std::size_t s = 0; s < S_; ++s) {
                const double w = m.discount * strategy(s, v);
                if (w == 0.0) continue;
                for (const auto& t : m.next_states(s, u, v)) {
                    for (std::size_t o = 0; o < O_; ++o) {
                        const double z = m.obs_prob(t.next, u, o) * t.prob * w;
                        if (z == 0.0) continue;
                        for (std::size_t i = 0; i < N_; ++i) slot(u, v, o, i)[s] += z * vf.vectors[i].weights[t.next];
                    }
                }
            }
        });
    }

    std::size_t size() const { return N_; }

    const double* at(std::size_t u, std::size_t v, std::size_t o, std::size_t i) const {
        return data_.data() + (((u * V_ + v) * O_ + o) * N_ + i) * S_;
    }

private:
    double* slot(std::size_t u, std::size_t v, std::size_t o, std::size_t i) {
        return data_.data() + (((u * V_ + v) * O_ + o) * N_ + i) * S_;
    }

    std::size_t U_, V_, O_, N_, S_;
    std::vector<double> data_;
};

// |U| · |V_n|^{|V||O|}, saturating at the largest size_t.
inline std::size_t exact_backup_count(std::size_t U, std::size_t N, std::size_t V, std::size_t O) {
    std::size_t count = U;
    for (std::size_t k = 0; k < V * O; ++k) {
        if (N != 0 && count > std::numeric_limits<std::size_t>::max() / N) return std::numeric_limits<std::size_t>::max();
        count *= N;
    }
    return count;
}

// Unpruned cross-sum backup: every choice of one successor vector per (v, o)
// branch, for every u.
inline ValueFunction exact_backup(const ValueFunction& vf, const StrategyTable& strategy, const PosgModel& m,
                                  std::size_t cap = 1000000) {
    const std::size_t U = m.num_actions_self, V = m.num_actions_other, O = m.num_observations, S = m.num_states;
    const std::size_t N = vf.vectors.size();
    const std::size_t count = exact_backup_count(U, N, V, O);
    if (count > cap)
        throw std::length_error("exact_backup would generate " +
                                (count == std::numeric_limits<std::size_t>::max() ? std::string("more than 2^64")
                                                                                   : std::to_string(count)) +
                                " vectors, above the cap of " + std::to_string(cap));
    ProjectionSet gamma(m, strategy, vf, 1);
    ValueFunction out;
    out.horizon = vf.horizon + 1;
    out.vectors.reserve(count);
    const std::size_t branches = V * O;
    std::vector<std::size_t> choice(branches);
    for (std::size_t u = 0; u < U; ++u) {
        const auto base = payoff_vector(m, strategy, u);
        std::fill(choice.begin(), choice.end(), 0);
        while (true) {
            AlphaVector a{base, u};
            for (std::size_t br = 0; br < branches; ++br) {
                const double* g = gamma.at(u, br / O, br % O, choice[br]);
                for (std::size_t s = 0; s < S; ++s) a.weights[s] += g[s];
            }
            out.vectors.push_back(std::move(a));
            std::size_t d = 0;
            while (d < branches && ++choice[d] == N) choice[d++] = 0;
            if (d == branches) break;
        }
    }
    return out;
}

// Point-based backup: one maximizing vector per belief point, exact
// duplicates removed. Beliefs are processed independently, so the result
// does not depend on the worker count.
inline ValueFunction pbvi_backup(const ValueFunction& vf, const std::vector<Belief>& beliefs,
                                 const StrategyTable& strategy, const PosgModel& m, std::size_t workers = 1) {
    if (beliefs.empty()) throw std::invalid_argument("pbvi_backup: empty belief set");
    const std::size_t U = m.num_actions_self, V = m.num_actions_other, O = m.num_observations, S = m.num_states;
    const ProjectionSet gamma(m, strategy, vf, workers);
    std::vector<std::vector<double>> base(U);
    for (std::size_t u = 0; u < U; ++u) base[u] = payoff_vector(m, strategy, u);

    std::vector<AlphaVector> chosen(beliefs.size());
    parallel_for(beliefs.size(), workers, [&](std::size_t j) {
        const Belief& b = beliefs[j];
        double best_value = -std::numeric_limits<double>::infinity();
        std::vector<double> candidate(S);
        for (std::size_t u = 0; u < U; ++u) {
            candidate = base[u];
            for (std::size_t v = 0; v < V; ++v) {
                for (std::size_t o = 0; o < O; ++o) {
                    std::size_t arg = 0;
                    double arg_value = -std::numeric_limits<double>::infinity();
                    for (std::size_t i = 0; i < gamma.size(); ++i) {
                        const double* g = gamma.at(u, v, o, i);
                        double x = 0.0;
                        for (std::size_t s = 0; s < S; ++s) x += g[s] * b[s];
                        if (x > arg_value) {
                            arg_value = x;
                            arg = i;
                        }
                    }
                    const double* g = gamma.at(u, v, o, arg);
                    for (std::size_t s = 0; s < S; ++s) candidate[s] += g[s];
                }
            }
            const double value = dot(candidate, b.probs());
            if (value > best_value) {
                best_value = value;
                chosen[j] = {candidate, u};
            }
        }
    });

    ValueFunction out;
    out.horizon = vf.horizon + 1;
    out.beliefs = beliefs;
    for (auto& a : chosen) {
        const bool duplicate = std::any_of(out.vectors.begin(), out.vectors.end(), [&](const AlphaVector& x) {
            for (std::size_t s = 0; s < S; ++s)
                if (std::abs(x.weights[s] - a.weights[s]) > kVectorDuplicateTolerance) return false;
            return true;
        });
        if (!duplicate) out.vectors.push_back(std::move(a));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Belief sets

struct BeliefSet {
    std::vector<Belief> points;
    std::uint64_t seed = 0;
    std::size_t depth = 0;      // deepest expansion step among kept points
    bool saturated = false;     // stopped before reaching the target count
};

namespace detail {

inline bool far_from_all(const std::vector<Belief>& points, const Belief& b, double threshold) {
    for (const auto& p : points)
        if (belief_l1_distance(p, b) <= threshold) return false;
    return true;
}

}  // namespace detail

// Stochastic forward expansion from b0: pick a stored point, a uniform u,
// and a (v, o) branch drawn from Pr(v, o | b, u); keep the posterior when
// it is farther than the dedup threshold from every stored point.
inline BeliefSet sample_beliefs(const PosgModel& m, const StrategyTable& strategy, std::size_t target,
                                std::uint64_t seed, std::size_t max_attempts = 0) {
    if (target == 0) throw std::invalid_argument("sample_beliefs: target count must be at least 1");
    if (max_attempts == 0) max_attempts = 200 * target;
    BeliefSet set;
    set.seed = seed;
    set.points.push_back(Belief(m.initial_belief));
    std::vector<std::size_t> depth{0};
    Rng rng(seed);
    const std::size_t V = m.num_actions_other, O = m.num_observations;
    std::vector<double> branch(V * O);
    std::size_t attempts = 0;
    while (set.points.size() < target && attempts < max_attempts) {
        ++attempts;
        const std::size_t parent = rng.below(set.points.size());
        const Belief& b = set.points[parent];
        const std::size_t u = rng.below(m.num_actions_self);
        for (std::size_t v = 0; v < V; ++v) {
            auto tau = propagate(m, strategy, b, u, v);
            for (std::size_t o = 0; o < O; ++o) {
                double x = 0.0;
                for (std::size_t n = 0; n < m.num_states; ++n) x += m.obs_prob(n, u, o) * tau[n];
                branch[v * O + o] = x;
            }
        }
        const std::size_t pick = rng.categorical(branch);
        if (!(branch[pick] > 0.0)) continue;
        Belief next = belief_update(m, strategy, b, u, pick / O, pick % O);
        if (detail::far_from_all(set.points, next, kBeliefDedupThreshold)) {
            set.points.push_back(std::move(next));
            depth.push_back(depth[parent] + 1);
            set.depth = std::max(set.depth, depth.back());
        }
    }
    set.saturated = set.points.size() < target;
    return set;
}

// Every belief reachable from b0 within `depth` steps under positive-
// probability (u, v, o) branches; only numerically identical points merge.
inline std::vector<Belief> reachable_beliefs(const PosgModel& m, const StrategyTable& strategy, std::size_t depth,
                                             std::size_t limit = 100000) {
    std::vector<Belief> all{Belief(m.initial_belief)};
    std::vector<Belief> frontier = all;
    for (std::size_t d = 0; d < depth; ++d) {
        std::vector<Belief> next_frontier;
        for (const auto& b : frontier) {
            for (std::size_t u = 0; u < m.num_actions_self; ++u)
                for (std::size_t v = 0; v < m.num_actions_other; ++v)
                    for (std::size_t o = 0; o < m.num_observations; ++o) {
                        if (!(joint_obs_prob(m, strategy, b, u, v, o) > 0.0)) continue;
                        Belief n = belief_update(m, strategy, b, u, v, o);
                        if (!detail::far_from_all(all, n, kVectorDuplicateTolerance)) continue;
                        all.push_back(n);
                        next_frontier.push_back(std::move(n));
                        if (all.size() > limit)
                            throw std::length_error("reachable_beliefs: more than " + std::to_string(limit) +
                                                    " beliefs");
                    }
        }
        frontier = std::move(next_frontier);
    }
    return all;
}

// ---------------------------------------------------------------------------
// Planning and acting

struct PlanResult {
    ValueFunction value;
    BeliefSet beliefs;
    std::vector<double> sweep_ms;
    double sampling_ms = 0.0;
};

inline ValueFunction run_sweeps(const PosgModel& m, const StrategyTable& strategy, const std::vector<Belief>& beliefs,
                                std::size_t sweeps, std::size_t workers = 1, std::vector<double>* sweep_ms = nullptr) {
    ValueFunction vf = ValueFunction::zero(m.num_states);
    for (std::size_t n = 0; n < sweeps; ++n) {
        const auto start = std::chrono::steady_clock::now();
        vf = pbvi_backup(vf, beliefs, strategy, m, workers);
        const auto stop = std::chrono::steady_clock::now();
        if (sweep_ms) sweep_ms->push_back(std::chrono::duration<double, std::milli>(stop - start).count());
    }
    return vf;
}

inline PlanResult plan(const PosgModel& m, const StrategyTable& strategy, std::size_t horizon,
                       std::size_t belief_count, std::uint64_t seed, std::size_t workers = 1) {
    require_valid(m);
    strategy.require_normalized("plan");
    PlanResult result;
    const auto start = std::chrono::steady_clock::now();
    result.beliefs = sample_beliefs(m, strategy, belief_count, seed);
    result.sampling_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    result.value = run_sweeps(m, strategy, result.beliefs.points, horizon, workers, &result.sweep_ms);
    return result;
}

// One-step lookahead values for every u; zero-probability branches skipped.
inline std::vector<double> lookahead_values(const ValueFunction& vf, const Belief& b, const StrategyTable& strategy,
                                            const PosgModel& m) {
    std::vector<double> q(m.num_actions_self);
    for (std::size_t u = 0; u < m.num_actions_self; ++u) {
        double x = expected_payoff(m, strategy, b, u);
        for (std::size_t v = 0; v < m.num_actions_other; ++v) {
            auto tau = propagate(m, strategy, b, u, v);
            for (std::size_t o = 0; o < m.num_observations; ++o) {
                std::vector<double> post(m.num_states);
                double p = 0.0;
                for (std::size_t n = 0; n < m.num_states; ++n) {
                    post[n] = tau[n] * m.obs_prob(n, u, o);
                    p += post[n];
                }
                if (!(p > 0.0)) continue;
                for (auto& y : post) y /= p;
                x += m.discount * p * vf.value_of(Belief(std::move(post)));
            }
        }
        q[u] = x;
    }
    return q;
}

inline std::size_t act(const ValueFunction& vf, const Belief& b, const StrategyTable& strategy, const PosgModel& m) {
    auto q = lookahead_values(vf, b, strategy, m);
    return static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
}

// ---------------------------------------------------------------------------
// Text IO

inline constexpr int kValueFormatVersion = 1;

inline void write_value_function(std::ostream& out, const ValueFunction& vf) {
    const std::size_t S = vf.vectors.empty() ? 0 : vf.vectors.front().weights.size();
    out << "iplite-value " << kValueFormatVersion << '\n';
    out << "horizon " << vf.horizon << '\n';
    out << "states " << S << '\n';
    out << "vectors " << vf.vectors.size() << '\n';
    for (const auto& a : vf.vectors) {
        out << a.action;
        for (double w : a.weights) out << ' ' << format_17g(w);
        out << '\n';
    }
    out << "end\n";
}

inline ValueFunction read_value_function(std::istream& in) {
    TokenStream ts(in);
    ts.expect("iplite-value");
    {
        const std::size_t line = ts.line();
        if (ts.next_uint() != kValueFormatVersion) throw ParseError(line, "unsupported value format version");
    }
    ValueFunction vf;
    ts.expect("horizon");
    vf.horizon = ts.next_uint();
    ts.expect("states");
    const std::size_t S = ts.next_uint();
    ts.expect("vectors");
    const std::size_t count = ts.next_uint();
    if (count == 0) throw ParseError(ts.line(), "value function must contain at least one vector");
    vf.vectors.resize(count);
    for (auto& a : vf.vectors) {
        a.action = ts.next_uint();
        a.weights.resize(S);
        for (auto& w : a.weights) w = ts.next_double();
    }
    ts.expect("end");
    return vf;
}

inline void save_value_function(const std::string& path, const ValueFunction& vf) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write value file '" + path + "'");
    write_value_function(out, vf);
}

inline ValueFunction load_value_function(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open value file '" + path + "'");
    return read_value_function(in);
}

}  // namespace iplite
