#pragma once

// Tabular two-agent game representation shared by every solver, plus
// belief and strategy arithmetic.
//
// Index conventions: "self" is the planning agent (actions u in U), "other"
// is its counterpart (actions v in V). Transitions are stored row-sparse with
// one row per (s, u, v); observation and reward tables are dense.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace iplite {

inline constexpr double kProbabilityTolerance = 1e-9;

struct Transition {
    std::size_t next = 0;
    double prob = 0.0;

    friend bool operator==(const Transition&, const Transition&) = default;
};

// Compressed rows of (next state, probability) pairs. Rows are appended in
// index order while a model is being built and never modified afterwards.
class TransitionTable {
public:
    void push_row(std::span<const Transition> row) {
        entries_.insert(entries_.end(), row.begin(), row.end());
        offsets_.push_back(entries_.size());
    }

    void reserve(std::size_t rows, std::size_t entries) {
        offsets_.reserve(rows + 1);
        entries_.reserve(entries);
    }

    std::size_t rows() const { return offsets_.size() - 1; }
    std::size_t nonzeros() const { return entries_.size(); }

    std::span<const Transition> row(std::size_t r) const {
        return std::span<const Transition>(entries_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]);
    }

    friend bool operator==(const TransitionTable&, const TransitionTable&) = default;

private:
    std::vector<std::size_t> offsets_{0};
    std::vector<Transition> entries_;
};

struct PosgModel {
    std::size_t num_states = 0;
    std::size_t num_actions_self = 0;
    std::size_t num_actions_other = 0;
    std::size_t num_observations = 0;
    // Size of the counterpart's observation alphabet; 0 when the model does
    // not describe the counterpart's sensing.
    std::size_t num_observations_other = 0;
    double discount = 0.95;
    // The counterpart's own discount when it plans differently; unset means
    // both seats share `discount`. Zero models a myopic counterpart.
    std::optional<double> discount_other;
    bool zero_sum = true;

    TransitionTable transition;             // rows (s, u, v) -> s'
    std::vector<double> observation;        // Z[s'][u][o]
    std::vector<double> observation_other;  // Z_other[s'][v][o], optional
    std::vector<double> reward;             // R[s][u][v]
    std::vector<double> reward_other;       // explicit counterpart reward, optional
    std::vector<double> initial_belief;     // b0[s]
    std::vector<std::uint8_t> legal_self;   // [s][u]; empty means all legal
    std::vector<std::uint8_t> legal_other;  // [s][v]; empty means all legal

    double counterpart_discount() const { return discount_other.value_or(discount); }

    std::size_t row_index(std::size_t s, std::size_t u, std::size_t v) const {
        return (s * num_actions_self + u) * num_actions_other + v;
    }

    std::span<const Transition> next_states(std::size_t s, std::size_t u, std::size_t v) const {
        return transition.row(row_index(s, u, v));
    }

    double obs_prob(std::size_t next, std::size_t u, std::size_t o) const {
        return observation[(next * num_actions_self + u) * num_observations + o];
    }

    double obs_prob_other(std::size_t next, std::size_t v, std::size_t o) const {
        return observation_other[(next * num_actions_other + v) * num_observations_other + o];
    }

    double r(std::size_t s, std::size_t u, std::size_t v) const {
        return reward[(s * num_actions_self + u) * num_actions_other + v];
    }

    bool has_opponent_reward() const { return zero_sum || !reward_other.empty(); }

    double opponent_reward(std::size_t s, std::size_t u, std::size_t v) const {
        if (zero_sum) return -r(s, u, v);
        if (reward_other.empty()) throw std::logic_error("model has no counterpart reward");
        return reward_other[(s * num_actions_self + u) * num_actions_other + v];
    }

    bool legal_u(std::size_t s, std::size_t u) const {
        return legal_self.empty() || legal_self[s * num_actions_self + u] != 0;
    }

    bool legal_v(std::size_t s, std::size_t v) const {
        return legal_other.empty() || legal_other[s * num_actions_other + v] != 0;
    }

    double reward_max() const { return *std::max_element(reward.begin(), reward.end()); }
    double reward_min() const { return *std::min_element(reward.begin(), reward.end()); }
    // max |R|, the magnitude bound used by the value-function invariants.
    double reward_bound() const { return std::max(std::abs(reward_max()), std::abs(reward_min())); }
};

// ---------------------------------------------------------------------------
// Beliefs

class Belief {
public:
    Belief() = default;

    // Takes ownership of a distribution; entries must be nonnegative and sum
    // to one within the probability tolerance.
    explicit Belief(std::vector<double> probs) : probs_(std::move(probs)) {
        double total = 0.0;
        for (double p : probs_) {
            if (!(p >= 0.0)) throw std::invalid_argument("belief entry is negative or NaN");
            total += p;
        }
        if (std::abs(total - 1.0) > kProbabilityTolerance)
            throw std::invalid_argument("belief sums to " + std::to_string(total));
    }

    static Belief normalized(std::vector<double> weights) {
        double total = std::accumulate(weights.begin(), weights.end(), 0.0);
        if (!(total > 0.0)) throw std::invalid_argument("cannot normalize a zero-mass belief");
        for (auto& w : weights) w /= total;
        return Belief(std::move(weights));
    }

    static Belief point_mass(std::size_t n, std::size_t s) {
        std::vector<double> p(n, 0.0);
        p.at(s) = 1.0;
        return Belief(std::move(p));
    }

    static Belief uniform(std::size_t n) { return Belief(std::vector<double>(n, 1.0 / static_cast<double>(n))); }

    std::size_t size() const { return probs_.size(); }
    double operator[](std::size_t s) const { return probs_[s]; }
    std::span<const double> probs() const { return probs_; }

    friend bool operator==(const Belief&, const Belief&) = default;

private:
    std::vector<double> probs_;
};

inline double belief_l1_distance(const Belief& a, const Belief& b) {
    if (a.size() != b.size()) throw std::invalid_argument("belief_l1_distance: dimension mismatch");
    double d = 0.0;
    for (std::size_t s = 0; s < a.size(); ++s) d += std::abs(a[s] - b[s]);
    return d;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double x = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) x += a[i] * b[i];
    return x;
}

// ---------------------------------------------------------------------------
// Strategy tables: probs[s][a], a distribution over one agent's actions per state.

class StrategyTable {
public:
    StrategyTable() = default;

    StrategyTable(std::size_t num_states, std::size_t num_actions, std::vector<double> probs)
        : num_states_(num_states), num_actions_(num_actions), probs_(std::move(probs)) {
        if (probs_.size() != num_states * num_actions)
            throw std::invalid_argument("strategy table has wrong size");
    }

    static StrategyTable uniform(std::size_t num_states, std::size_t num_actions) {
        return StrategyTable(num_states, num_actions,
                             std::vector<double>(num_states * num_actions, 1.0 / static_cast<double>(num_actions)));
    }

    std::size_t num_states() const { return num_states_; }
    std::size_t num_actions() const { return num_actions_; }

    double operator()(std::size_t s, std::size_t a) const { return probs_[s * num_actions_ + a]; }

    std::span<const double> row(std::size_t s) const {
        return std::span<const double>(probs_.data() + s * num_actions_, num_actions_);
    }

    std::span<const double> data() const { return probs_; }

    // First state whose row is not a distribution, or num_states() if none.
    std::size_t first_unnormalized(double tol = kProbabilityTolerance) const {
        for (std::size_t s = 0; s < num_states_; ++s) {
            double total = 0.0;
            bool negative = false;
            for (double p : row(s)) {
                total += p;
                negative |= !(p >= 0.0);
            }
            if (negative || std::abs(total - 1.0) > tol) return s;
        }
        return num_states_;
    }

    void require_normalized(const char* who) const {
        if (auto s = first_unnormalized(); s != num_states_)
            throw std::invalid_argument(std::string(who) + ": strategy row " + std::to_string(s) +
                                        " is not a distribution");
    }

    friend bool operator==(const StrategyTable&, const StrategyTable&) = default;

private:
    std::size_t num_states_ = 0;
    std::size_t num_actions_ = 0;
    std::vector<double> probs_;
};

enum class Seat { self, other };

inline const char* seat_name(Seat seat) { return seat == Seat::self ? "self" : "other"; }
inline Seat opposite(Seat seat) { return seat == Seat::self ? Seat::other : Seat::self; }

// Uniform over the legal actions of one seat.
inline StrategyTable uniform_legal_strategy(const PosgModel& m, Seat seat) {
    const std::size_t A = seat == Seat::self ? m.num_actions_self : m.num_actions_other;
    std::vector<double> p(m.num_states * A, 0.0);
    for (std::size_t s = 0; s < m.num_states; ++s) {
        std::size_t count = 0;
        for (std::size_t a = 0; a < A; ++a) count += (seat == Seat::self ? m.legal_u(s, a) : m.legal_v(s, a));
        for (std::size_t a = 0; a < A; ++a) {
            bool legal = seat == Seat::self ? m.legal_u(s, a) : m.legal_v(s, a);
            if (count == 0) p[s * A + a] = 1.0 / static_cast<double>(A);
            else if (legal) p[s * A + a] = 1.0 / static_cast<double>(count);
        }
    }
    return StrategyTable(m.num_states, A, std::move(p));
}

// ---------------------------------------------------------------------------
// Fully observable projection for one seat. Actions are reindexed so that
// `a` is always the acting agent's action and `b` the counterpart's.

class MdpView {
public:
    MdpView(const PosgModel& model, Seat seat) : model_(&model), seat_(seat) {
        if (seat == Seat::other && !model.has_opponent_reward())
            throw std::invalid_argument("MdpView: model defines no reward for the counterpart");
    }

    const PosgModel& model() const { return *model_; }
    Seat seat() const { return seat_; }
    std::size_t num_states() const { return model_->num_states; }
    std::size_t num_actions() const {
        return seat_ == Seat::self ? model_->num_actions_self : model_->num_actions_other;
    }
    std::size_t num_counter_actions() const {
        return seat_ == Seat::self ? model_->num_actions_other : model_->num_actions_self;
    }
    double discount() const { return seat_ == Seat::self ? model_->discount : model_->counterpart_discount(); }

    std::span<const Transition> next_states(std::size_t s, std::size_t a, std::size_t b) const {
        return seat_ == Seat::self ? model_->next_states(s, a, b) : model_->next_states(s, b, a);
    }

    double reward(std::size_t s, std::size_t a, std::size_t b) const {
        return seat_ == Seat::self ? model_->r(s, a, b) : model_->opponent_reward(s, b, a);
    }

    bool legal(std::size_t s, std::size_t a) const {
        return seat_ == Seat::self ? model_->legal_u(s, a) : model_->legal_v(s, a);
    }

    bool counter_legal(std::size_t s, std::size_t b) const {
        return seat_ == Seat::self ? model_->legal_v(s, b) : model_->legal_u(s, b);
    }

private:
    const PosgModel* model_;
    Seat seat_;
};

// The same game seen from the counterpart's chair: actions swapped, the
// counterpart's reward and observation channel promoted to "self". Models
// without a counterpart observation channel get a single blank observation.
inline PosgModel opponent_view(const PosgModel& m) {
    if (!m.has_opponent_reward()) throw std::invalid_argument("opponent_view: no counterpart reward");
    PosgModel out;
    out.num_states = m.num_states;
    out.num_actions_self = m.num_actions_other;
    out.num_actions_other = m.num_actions_self;
    out.discount = m.counterpart_discount();
    if (m.discount_other) out.discount_other = m.discount;
    out.zero_sum = m.zero_sum;
    out.initial_belief = m.initial_belief;
    const std::size_t S = m.num_states, U = m.num_actions_self, V = m.num_actions_other;

    out.transition.reserve(S * U * V, m.transition.nonzeros());
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t v = 0; v < V; ++v)
            for (std::size_t u = 0; u < U; ++u) out.transition.push_row(m.next_states(s, u, v));

    out.reward.resize(S * V * U);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t v = 0; v < V; ++v)
            for (std::size_t u = 0; u < U; ++u) out.reward[(s * V + v) * U + u] = m.opponent_reward(s, u, v);
    if (!m.zero_sum) {
        out.reward_other.resize(S * V * U);
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t v = 0; v < V; ++v)
                for (std::size_t u = 0; u < U; ++u) out.reward_other[(s * V + v) * U + u] = m.r(s, u, v);
    }

    if (m.num_observations_other > 0) {
        out.num_observations = m.num_observations_other;
        out.observation = m.observation_other;
    } else {
        out.num_observations = 1;
        out.observation.assign(S * V, 1.0);
    }
    out.num_observations_other = m.num_observations;
    out.observation_other = m.observation;

    if (!m.legal_other.empty()) out.legal_self = m.legal_other;
    if (!m.legal_self.empty()) out.legal_other = m.legal_self;
    return out;
}

// ---------------------------------------------------------------------------
// Validation

struct Violation {
    std::string table;                 // "T", "Z", "Z_other", "R", "b0", "discount", "shape", "legal"
    std::vector<std::size_t> index;    // offending coordinates
    double deficit = 0.0;              // 1 - row sum, or the offending value

    std::string describe() const {
        std::ostringstream os;
        os << table;
        if (!index.empty()) {
            os << '[';
            for (std::size_t i = 0; i < index.size(); ++i) os << (i ? "," : "") << index[i];
            os << ']';
        }
        os << " deficit " << deficit;
        return os.str();
    }
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

namespace detail {

inline void check_rows(ValidationReport& rep, const std::string& table, std::span<const double> data,
                       std::size_t rows_a, std::size_t rows_b, std::size_t width) {
    if (data.size() != rows_a * rows_b * width) {
        rep.violations.push_back({"shape", {}, static_cast<double>(data.size())});
        return;
    }
    for (std::size_t i = 0; i < rows_a; ++i) {
        for (std::size_t j = 0; j < rows_b; ++j) {
            double total = 0.0;
            bool bad = false;
            for (std::size_t k = 0; k < width; ++k) {
                double p = data[(i * rows_b + j) * width + k];
                bad |= !(p >= 0.0 && p <= 1.0);
                total += p;
            }
            if (bad || std::abs(total - 1.0) > kProbabilityTolerance)
                rep.violations.push_back({table, {i, j}, 1.0 - total});
        }
    }
}

}  // namespace detail

inline ValidationReport validate_model(const PosgModel& m) {
    ValidationReport rep;
    const std::size_t S = m.num_states, U = m.num_actions_self, V = m.num_actions_other;
    if (S == 0 || U == 0 || V == 0 || m.num_observations == 0) {
        rep.violations.push_back({"shape", {S, U, V, m.num_observations}, 0.0});
        return rep;
    }
    if (!(m.discount > 0.0 && m.discount < 1.0)) rep.violations.push_back({"discount", {}, m.discount});
    if (m.discount_other && !(*m.discount_other >= 0.0 && *m.discount_other < 1.0))
        rep.violations.push_back({"discount_other", {}, *m.discount_other});

    if (m.transition.rows() != S * U * V) {
        rep.violations.push_back({"T", {}, static_cast<double>(m.transition.rows())});
    } else {
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t u = 0; u < U; ++u)
                for (std::size_t v = 0; v < V; ++v) {
                    double total = 0.0;
                    bool bad = false;
                    for (const auto& t : m.next_states(s, u, v)) {
                        bad |= t.next >= S || !(t.prob >= 0.0 && t.prob <= 1.0);
                        total += t.prob;
                    }
                    if (bad || std::abs(total - 1.0) > kProbabilityTolerance)
                        rep.violations.push_back({"T", {s, u, v}, 1.0 - total});
                }
    }

    detail::check_rows(rep, "Z", m.observation, S, U, m.num_observations);
    if (m.num_observations_other > 0)
        detail::check_rows(rep, "Z_other", m.observation_other, S, V, m.num_observations_other);

    if (m.reward.size() != S * U * V) rep.violations.push_back({"R", {}, static_cast<double>(m.reward.size())});
    for (std::size_t i = 0; i < m.reward.size(); ++i)
        if (!std::isfinite(m.reward[i])) rep.violations.push_back({"R", {i}, m.reward[i]});
    if (!m.zero_sum && !m.reward_other.empty() && m.reward_other.size() != S * U * V)
        rep.violations.push_back({"R_other", {}, static_cast<double>(m.reward_other.size())});

    detail::check_rows(rep, "b0", m.initial_belief, 1, 1, S);

    auto check_legal = [&](const std::vector<std::uint8_t>& mask, std::size_t A, const char* name) {
        if (mask.empty()) return;
        if (mask.size() != S * A) {
            rep.violations.push_back({name, {}, static_cast<double>(mask.size())});
            return;
        }
        for (std::size_t s = 0; s < S; ++s)
            if (std::none_of(mask.begin() + s * A, mask.begin() + (s + 1) * A, [](auto x) { return x != 0; }))
                rep.violations.push_back({name, {s}, 0.0});
    };
    check_legal(m.legal_self, U, "legal_self");
    check_legal(m.legal_other, V, "legal_other");
    return rep;
}

inline void require_valid(const PosgModel& m) {
    auto rep = validate_model(m);
    if (!rep.ok()) throw std::invalid_argument("invalid model: " + rep.violations.front().describe());
}

}  // namespace iplite
