#pragma once

// Opponent and benchmark policies, and the Agent interface the arena drives.
// Every agent plays one seat of a model. Solver-backed agents do all their
// planning in the constructor and share the result between clones.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "iplite/core/rng.hpp"
#include "iplite/core/text.hpp"
#include "iplite/environments/intersection.hpp"
#include "iplite/environments/soccer.hpp"
#include "iplite/ipomdp_lite.hpp"
#include "iplite/matrix_game.hpp"
#include "iplite/model.hpp"
#include "iplite/nested_mdp.hpp"

namespace iplite {

inline std::size_t seat_actions(const PosgModel& m, Seat seat) {
    return seat == Seat::self ? m.num_actions_self : m.num_actions_other;
}

inline bool seat_legal(const PosgModel& m, Seat seat, std::size_t s, std::size_t a) {
    return seat == Seat::self ? m.legal_u(s, a) : m.legal_v(s, a);
}

// ---------------------------------------------------------------------------
// Stateless policies

inline std::vector<double> random_policy(const PosgModel& m, Seat seat, std::size_t s) {
    const std::size_t A = seat_actions(m, seat);
    std::vector<double> p(A, 0.0);
    std::size_t count = 0;
    for (std::size_t a = 0; a < A; ++a) count += seat_legal(m, seat, s, a);
    for (std::size_t a = 0; a < A; ++a)
        if (seat_legal(m, seat, s, a)) p[a] = 1.0 / static_cast<double>(count);
    return p;
}

struct MaximinResult {
    StrategyTable self;   // maximin strategy of the self seat per state
    StrategyTable other;  // minimax strategy of the other seat per state
    std::vector<double> values;  // security values for the self seat
    double max_gap = 0.0;        // largest stage-game duality gap seen
};

// Value iteration where every state's stage game is solved exactly for its
// maximin mixed strategy. Legality masks restrict the stage matrices.
inline MaximinResult maximin_policy(const PosgModel& m, std::size_t horizon) {
    if (!m.zero_sum) throw std::invalid_argument("maximin_policy: model is not zero-sum");
    if (horizon == 0) throw std::invalid_argument("maximin_policy: horizon must be at least 1");
    const std::size_t S = m.num_states, U = m.num_actions_self, V = m.num_actions_other;
    std::vector<double> values(S, 0.0), next(S);
    std::vector<double> ps(S * U), po(S * V);
    double max_gap = 0.0;
    for (std::size_t h = 0; h < horizon; ++h) {
        max_gap = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            std::vector<std::size_t> rows, cols;
            for (std::size_t u = 0; u < U; ++u)
                if (m.legal_u(s, u)) rows.push_back(u);
            for (std::size_t v = 0; v < V; ++v)
                if (m.legal_v(s, v)) cols.push_back(v);
            std::vector<double> game(rows.size() * cols.size());
            for (std::size_t i = 0; i < rows.size(); ++i)
                for (std::size_t j = 0; j < cols.size(); ++j) {
                    double q = m.r(s, rows[i], cols[j]);
                    for (const auto& t : m.next_states(s, rows[i], cols[j])) q += m.discount * t.prob * values[t.next];
                    game[i * cols.size() + j] = q;
                }
            const auto sol = solve_matrix_game(game, rows.size(), cols.size());
            next[s] = sol.value;
            max_gap = std::max(max_gap, sol.gap);
            std::fill(ps.begin() + s * U, ps.begin() + (s + 1) * U, 0.0);
            std::fill(po.begin() + s * V, po.begin() + (s + 1) * V, 0.0);
            for (std::size_t i = 0; i < rows.size(); ++i) ps[s * U + rows[i]] = sol.row[i];
            for (std::size_t j = 0; j < cols.size(); ++j) po[s * V + cols[j]] = sol.col[j];
        }
        values.swap(next);
    }
    return {StrategyTable(S, U, ps), StrategyTable(S, V, po), values, max_gap};
}

// Tunable constants of the hand-built soccer tactics.
struct HandbuiltParams {
    double stand_probability = 0.1;  // stay still when a blocked attacker does not push forward
    double distance_scale = 5.0;     // forward probability is min(1, distance / distance_scale)
    int far_ahead = 2;               // a defender more than this many columns ahead is ignored
};

// Scoring and blocking tactics for the player in `seat`. Tracks are the goal
// rows; "forward" is the attacking direction of the ball carrier.
inline std::vector<double> handbuilt_soccer_policy(const SoccerLayout& layout, const SoccerState& st, Seat seat,
                                                   const HandbuiltParams& params = {}) {
    std::vector<double> p(kSoccerActions, 0.0);
    const Cell me = seat == Seat::self ? st.a : st.b;
    const Cell opp = seat == Seat::self ? st.b : st.a;
    const int rows = layout.spec().rows;
    const int track_lo = rows / 2 - 1, track_hi = rows / 2;
    auto vertical_toward = [&](int target_row) { return target_row < me.row ? kUp : kDown; };

    if (st.ball == seat) {
        const int h = SoccerLayout::heading(seat);
        const std::size_t forward = h < 0 ? kLeft : kRight;
        const int ahead = (opp.col - me.col) * h;  // > 0 when the opponent is between me and my goal
        const double dist = std::abs(opp.row - me.row) + std::abs(opp.col - me.col);
        const double q = std::min(1.0, dist / params.distance_scale);
        if (layout.goal_row(me.row)) {
            const bool blocked = opp.row == me.row && ahead > 0;
            if (!blocked) {
                p[forward] = 1.0;
            } else {
                p[forward] = q;
                p[kStand] = (1.0 - q) * params.stand_probability;
                p[kUp] = p[kDown] = (1.0 - q) * (1.0 - params.stand_probability) / 2.0;
            }
        } else {
            const std::size_t toward = vertical_toward(me.row < track_lo ? track_lo : track_hi);
            if (ahead <= 0 || ahead > params.far_ahead) {
                p[toward] = 1.0;
            } else {
                p[forward] = q;
                p[toward] = 1.0 - q;
            }
        }
        return p;
    }

    // Defending: the attacker heads toward its own goal direction.
    const int ha = SoccerLayout::heading(opposite(seat));
    const int lead = (me.col - opp.col) * ha;  // > 0 when I am between the attacker and its goal
    if (lead < 0) {
        p[ha < 0 ? kLeft : kRight] = 1.0;
    } else if (me.row == opp.row) {
        p[kStand] = 1.0;
    } else {
        p[vertical_toward(opp.row)] = 1.0;
    }
    return p;
}

// Probability that v causes an accident next step if the AV picks uniformly
// among its legal actions, read from the model's transition table.
inline std::vector<double> driver_accident_risk(const PosgModel& m, std::size_t accident_state, std::size_t s) {
    std::vector<double> risk(m.num_actions_other, 0.0);
    std::size_t legal_u = 0;
    for (std::size_t u = 0; u < m.num_actions_self; ++u) legal_u += m.legal_u(s, u);
    for (std::size_t v = 0; v < m.num_actions_other; ++v) {
        double r = 0.0;
        for (std::size_t u = 0; u < m.num_actions_self; ++u) {
            if (!m.legal_u(s, u)) continue;
            for (const auto& t : m.next_states(s, u, v))
                if (t.next == accident_state) r += t.prob;
        }
        risk[v] = legal_u ? r / static_cast<double>(legal_u) : 0.0;
    }
    return risk;
}

// Softmax over -risk / temperature restricted to the legal HV actions.
inline std::vector<double> scripted_driver_policy(const PosgModel& m, std::size_t accident_state, std::size_t s,
                                                  double temperature = 0.1) {
    if (!(temperature > 0.0)) throw std::invalid_argument("driver temperature must be positive");
    const auto risk = driver_accident_risk(m, accident_state, s);
    double lowest = 1e300;
    for (std::size_t v = 0; v < risk.size(); ++v)
        if (m.legal_v(s, v)) lowest = std::min(lowest, risk[v]);
    std::vector<double> p(risk.size(), 0.0);
    double total = 0.0;
    for (std::size_t v = 0; v < risk.size(); ++v) {
        if (!m.legal_v(s, v)) continue;
        p[v] = std::exp(-(risk[v] - lowest) / temperature);
        total += p[v];
    }
    for (auto& x : p) x /= total;
    return p;
}

// ---------------------------------------------------------------------------
// Agents

struct StepInput {
    std::size_t state = 0;  // true state; only full-observability agents read it
    std::size_t stage = 0;
};

class Agent {
public:
    virtual ~Agent() = default;
    virtual std::unique_ptr<Agent> clone() const = 0;
    virtual std::string name() const = 0;
    virtual Seat seat() const = 0;
    // Starts an episode; seed feeds any private randomness of the agent.
    virtual void reset(std::uint64_t seed) { (void)seed; }
    virtual std::size_t act(const StepInput& in, Rng& rng) = 0;
    // Own action, counterpart action, own observation after a stage.
    virtual void observe(std::size_t own, std::size_t counter, std::size_t obs) {
        (void)own;
        (void)counter;
        (void)obs;
    }
    // Offline planning time spent building this agent.
    virtual double planning_ms() const { return 0.0; }
};

namespace detail {

inline double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace detail

class RandomAgent : public Agent {
public:
    RandomAgent(std::shared_ptr<const PosgModel> model, Seat seat) : model_(std::move(model)), seat_(seat) {}
    std::unique_ptr<Agent> clone() const override { return std::make_unique<RandomAgent>(*this); }
    std::string name() const override { return "random"; }
    Seat seat() const override { return seat_; }
    std::size_t act(const StepInput& in, Rng& rng) override {
        return rng.categorical(random_policy(*model_, seat_, in.state));
    }

private:
    std::shared_ptr<const PosgModel> model_;
    Seat seat_;
};

// Plays its level-k reasoning model: uniform over the actions optimal
// against the predicted counterpart mixture. Level 0 is the plain MDP agent.
class NestedMdpAgent : public Agent {
public:
    NestedMdpAgent(const PosgModel& model, Seat seat, std::size_t level, std::size_t horizon,
                   std::vector<double> level_weights = {}, std::size_t workers = 1)
        : seat_(seat), level_(level) {
        const auto start = std::chrono::steady_clock::now();
        stack_ = std::make_shared<const NestedPolicyStack>(
            solve_nested(model, seat, level, horizon, std::move(level_weights), workers));
        planning_ms_ = detail::elapsed_ms(start);
    }
    NestedMdpAgent(std::shared_ptr<const NestedPolicyStack> stack)
        : stack_(std::move(stack)), seat_(stack_->agent), level_(stack_->level) {}

    std::unique_ptr<Agent> clone() const override { return std::make_unique<NestedMdpAgent>(*this); }
    std::string name() const override { return level_ == 0 ? "mdp" : "nested-mdp:k=" + std::to_string(level_); }
    Seat seat() const override { return seat_; }
    std::size_t act(const StepInput& in, Rng& rng) override { return rng.categorical(stack_->policy().row(in.state)); }
    double planning_ms() const override { return planning_ms_; }
    const NestedPolicyStack& stack() const { return *stack_; }

private:
    std::shared_ptr<const NestedPolicyStack> stack_;
    Seat seat_;
    std::size_t level_;
    double planning_ms_ = 0.0;
};

class MaximinAgent : public Agent {
public:
    MaximinAgent(const PosgModel& model, Seat seat, std::size_t horizon) : seat_(seat) {
        const auto start = std::chrono::steady_clock::now();
        auto r = maximin_policy(model, horizon);
        strategy_ = std::make_shared<const StrategyTable>(seat == Seat::self ? r.self : r.other);
        planning_ms_ = detail::elapsed_ms(start);
    }
    std::unique_ptr<Agent> clone() const override { return std::make_unique<MaximinAgent>(*this); }
    std::string name() const override { return "maximin"; }
    Seat seat() const override { return seat_; }
    std::size_t act(const StepInput& in, Rng& rng) override { return rng.categorical(strategy_->row(in.state)); }
    double planning_ms() const override { return planning_ms_; }

private:
    std::shared_ptr<const StrategyTable> strategy_;
    Seat seat_;
    double planning_ms_ = 0.0;
};

struct PomdpPlan {
    PosgModel model;        // the game seen from the planning seat
    StrategyTable strategy;  // predicted counterpart behaviour
    ValueFunction value;
    double planning_ms = 0.0;
};

// Belief update that degrades gracefully on branches the prediction deems
// impossible: first drop the strategy factor, then drop the observation,
// and finally keep the prior.
inline Belief robust_belief_update(const PosgModel& m, const StrategyTable& strategy, const Belief& b, std::size_t u,
                                   std::size_t v, std::size_t o) {
    if (joint_obs_prob(m, strategy, b, u, v, o) > 0.0) return belief_update(m, strategy, b, u, v, o);
    std::vector<double> w(m.num_states, 0.0);
    for (std::size_t s = 0; s < m.num_states; ++s)
        for (const auto& t : m.next_states(s, u, v)) w[t.next] += t.prob * b[s] * m.obs_prob(t.next, u, o);
    double total = 0.0;
    for (double x : w) total += x;
    if (total > 0.0) return Belief::normalized(std::move(w));
    std::fill(w.begin(), w.end(), 0.0);
    for (std::size_t s = 0; s < m.num_states; ++s)
        for (const auto& t : m.next_states(s, u, v)) w[t.next] += t.prob * b[s];
    total = 0.0;
    for (double x : w) total += x;
    if (total > 0.0) return Belief::normalized(std::move(w));
    return b;
}

// Point-based planner agent. With a uniform strategy this is the POMDP
// baseline; with a nested-MDP prediction it is the level-k I-POMDP Lite agent.
class PomdpAgent : public Agent {
public:
    PomdpAgent(std::shared_ptr<const PomdpPlan> plan, Seat seat, std::string name)
        : plan_(std::move(plan)), seat_(seat), name_(std::move(name)), belief_(plan_->model.initial_belief) {}

    std::unique_ptr<Agent> clone() const override { return std::make_unique<PomdpAgent>(*this); }
    std::string name() const override { return name_; }
    Seat seat() const override { return seat_; }
    void reset(std::uint64_t) override { belief_ = Belief(plan_->model.initial_belief); }
    std::size_t act(const StepInput&, Rng&) override { return iplite::act(plan_->value, belief_, plan_->strategy, plan_->model); }
    void observe(std::size_t own, std::size_t counter, std::size_t obs) override {
        belief_ = robust_belief_update(plan_->model, plan_->strategy, belief_, own, counter, obs);
    }
    double planning_ms() const override { return plan_->planning_ms; }

    const Belief& belief() const { return belief_; }
    void set_belief(Belief b) { belief_ = std::move(b); }
    const PomdpPlan& plan() const { return *plan_; }

private:
    std::shared_ptr<const PomdpPlan> plan_;
    Seat seat_;
    std::string name_;
    Belief belief_;
};

// Builds the planner for one seat. level < 0 means the uniform-opponent
// POMDP baseline; otherwise the counterpart is predicted by a level-k
// nested MDP solved for nested_horizon steps.
inline std::shared_ptr<const PomdpPlan> make_pomdp_plan(const PosgModel& model, Seat seat, int level,
                                                        std::size_t horizon, std::size_t beliefs, std::uint64_t seed,
                                                        std::size_t nested_horizon = 0, std::size_t workers = 1) {
    const auto start = std::chrono::steady_clock::now();
    auto p = std::make_shared<PomdpPlan>();
    p->model = seat == Seat::self ? model : opponent_view(model);
    if (level < 0) {
        p->strategy = uniform_legal_strategy(p->model, Seat::other);
    } else {
        const std::size_t nh = nested_horizon ? nested_horizon : horizon;
        auto stack = solve_nested(p->model, Seat::self, static_cast<std::size_t>(level), nh, {}, workers);
        p->strategy = predict_mixed_strategy(p->model, stack, static_cast<std::size_t>(level));
    }
    p->value = plan(p->model, p->strategy, horizon, beliefs, seed, workers).value;
    p->planning_ms = detail::elapsed_ms(start);
    return p;
}

// Decision of one hybrid stage: either the MDP branch (with the belief reset
// to the true state) or the POMDP branch from the tracked belief.
struct HybridDecision {
    std::size_t action = 0;
    bool mdp_branch = false;
};

inline HybridDecision hybrid_step(double p, Agent& mdp, PomdpAgent& pomdp, const StepInput& in, Rng& rng, Rng& coin) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("hybrid probability must lie in [0, 1]");
    if (coin.bernoulli(p)) {
        pomdp.set_belief(Belief::point_mass(pomdp.plan().model.num_states, in.state));
        return {mdp.act(in, rng), true};
    }
    return {pomdp.act(in, rng), false};
}

class HybridAgent : public Agent {
public:
    HybridAgent(double p, std::unique_ptr<Agent> mdp, std::unique_ptr<PomdpAgent> pomdp)
        : p_(p), mdp_(std::move(mdp)), pomdp_(std::move(pomdp)) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("hybrid probability must lie in [0, 1]");
        if (mdp_->seat() != pomdp_->seat()) throw std::invalid_argument("hybrid components play different seats");
    }
    HybridAgent(const HybridAgent& o) : p_(o.p_), mdp_(o.mdp_->clone()), coin_(o.coin_), mdp_steps_(o.mdp_steps_), steps_(o.steps_) {
        pomdp_.reset(static_cast<PomdpAgent*>(o.pomdp_->clone().release()));
    }

    std::unique_ptr<Agent> clone() const override { return std::make_unique<HybridAgent>(*this); }
    std::string name() const override { return "hybrid:p=" + format_shortest(p_); }
    Seat seat() const override { return mdp_->seat(); }
    void reset(std::uint64_t seed) override {
        coin_ = Rng(derive_seed(seed, 0x4859u));
        mdp_->reset(seed);
        pomdp_->reset(seed);
    }
    std::size_t act(const StepInput& in, Rng& rng) override {
        auto d = hybrid_step(p_, *mdp_, *pomdp_, in, rng, coin_);
        mdp_steps_ += d.mdp_branch;
        ++steps_;
        return d.action;
    }
    void observe(std::size_t own, std::size_t counter, std::size_t obs) override {
        mdp_->observe(own, counter, obs);
        pomdp_->observe(own, counter, obs);
    }
    double planning_ms() const override { return mdp_->planning_ms() + pomdp_->planning_ms(); }

    std::size_t mdp_steps() const { return mdp_steps_; }
    std::size_t steps() const { return steps_; }

private:
    double p_;
    std::unique_ptr<Agent> mdp_;
    std::unique_ptr<PomdpAgent> pomdp_;
    Rng coin_{0};
    std::size_t mdp_steps_ = 0;
    std::size_t steps_ = 0;
};

class HandbuiltSoccerAgent : public Agent {
public:
    HandbuiltSoccerAgent(SoccerLayout layout, Seat seat, HandbuiltParams params = {})
        : layout_(layout), seat_(seat), params_(params) {}
    std::unique_ptr<Agent> clone() const override { return std::make_unique<HandbuiltSoccerAgent>(*this); }
    std::string name() const override { return "handbuilt"; }
    Seat seat() const override { return seat_; }
    std::size_t act(const StepInput& in, Rng& rng) override {
        if (layout_.is_terminal(in.state)) return kStand;
        return rng.categorical(handbuilt_soccer_policy(layout_, layout_.decode(in.state), seat_, params_));
    }

private:
    SoccerLayout layout_;
    Seat seat_;
    HandbuiltParams params_;
};

class ScriptedDriverAgent : public Agent {
public:
    ScriptedDriverAgent(std::shared_ptr<const PosgModel> model, std::size_t accident_state, double temperature = 0.1)
        : model_(std::move(model)), accident_(accident_state), temperature_(temperature) {}
    std::unique_ptr<Agent> clone() const override { return std::make_unique<ScriptedDriverAgent>(*this); }
    std::string name() const override { return "driver:temp=" + format_shortest(temperature_); }
    Seat seat() const override { return Seat::other; }
    std::size_t act(const StepInput& in, Rng& rng) override {
        return rng.categorical(scripted_driver_policy(*model_, accident_, in.state, temperature_));
    }

private:
    std::shared_ptr<const PosgModel> model_;
    std::size_t accident_;
    double temperature_;
};

}  // namespace iplite
