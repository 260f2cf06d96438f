#pragma once

// Agent specification strings, e.g. "ipomdp-lite:k=1,h=10,B=100" or
// "hybrid:p=0.5,h=10,B=100". The kind comes first; parameters follow a
// colon as comma-separated key=value pairs.

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "iplite/baselines.hpp"
#include "iplite/core/text.hpp"

namespace iplite {

struct AgentSpec {
    std::string kind;
    std::map<std::string, std::string> params;

    bool has(const std::string& key) const { return params.count(key) != 0; }

    double number(const std::string& key, double fallback) const {
        auto it = params.find(key);
        if (it == params.end()) return fallback;
        auto x = parse_double(it->second);
        if (!x) throw std::invalid_argument("agent '" + kind + "': parameter " + key + " is not a number");
        return *x;
    }

    std::size_t count(const std::string& key, std::size_t fallback) const {
        auto it = params.find(key);
        if (it == params.end()) return fallback;
        auto x = parse_uint(it->second);
        if (!x) throw std::invalid_argument("agent '" + kind + "': parameter " + key + " is not a nonnegative integer");
        return static_cast<std::size_t>(*x);
    }

    std::string to_string() const {
        std::string out = kind;
        char sep = ':';
        for (const auto& [k, v] : params) {
            out += sep + k + "=" + v;
            sep = ',';
        }
        return out;
    }
};

inline const std::map<std::string, std::set<std::string>>& agent_parameter_table() {
    static const std::map<std::string, std::set<std::string>> table{
        {"random", {}},
        {"mdp", {"h"}},
        {"nested-mdp", {"k", "h"}},
        {"pomdp", {"h", "B"}},
        {"ipomdp-lite", {"k", "h", "B", "nh"}},
        {"maximin", {"h"}},
        {"hybrid", {"p", "h", "B", "mh"}},
        {"handbuilt", {"stand", "dmax", "ahead"}},
        {"driver", {"temp"}},
    };
    return table;
}

inline AgentSpec parse_agent_spec(const std::string& text) {
    AgentSpec spec;
    const auto colon = text.find(':');
    spec.kind = text.substr(0, colon);
    const auto& table = agent_parameter_table();
    auto known = table.find(spec.kind);
    if (known == table.end()) throw std::invalid_argument("unknown agent kind '" + spec.kind + "'");
    if (colon == std::string::npos) return spec;
    std::string rest = text.substr(colon + 1);
    std::size_t pos = 0;
    while (pos <= rest.size()) {
        const auto comma = rest.find(',', pos);
        const std::string item = rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == item.size())
            throw std::invalid_argument("agent '" + spec.kind + "': malformed parameter '" + item + "'");
        const std::string key = item.substr(0, eq);
        if (!known->second.count(key))
            throw std::invalid_argument("agent '" + spec.kind + "' takes no parameter '" + key + "'");
        if (!spec.params.emplace(key, item.substr(eq + 1)).second)
            throw std::invalid_argument("agent '" + spec.kind + "': parameter '" + key + "' given twice");
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return spec;
}

// Defaults shared by all solver-backed agents unless the spec overrides them.
struct AgentDefaults {
    std::size_t mdp_horizon = 50;
    std::size_t pomdp_horizon = 10;
    std::size_t beliefs = 100;
    std::size_t level = 1;
};

// Everything needed to build an agent for one seat of a model.
struct AgentContext {
    std::shared_ptr<const PosgModel> model;
    Seat seat = Seat::self;
    std::uint64_t seed = 0;  // feeds belief sampling of planner agents
    std::size_t workers = 1;
    AgentDefaults defaults;
    std::optional<SoccerLayout> soccer;       // required by handbuilt
    std::optional<std::size_t> accident_state;  // required by driver
};

inline std::unique_ptr<Agent> make_agent(const AgentSpec& spec, const AgentContext& ctx) {
    if (!ctx.model) throw std::invalid_argument("make_agent: no model");
    const PosgModel& m = *ctx.model;
    const auto& d = ctx.defaults;
    if (spec.kind == "random") return std::make_unique<RandomAgent>(ctx.model, ctx.seat);
    if (spec.kind == "mdp")
        return std::make_unique<NestedMdpAgent>(m, ctx.seat, 0, spec.count("h", d.mdp_horizon), std::vector<double>{},
                                                ctx.workers);
    if (spec.kind == "nested-mdp")
        return std::make_unique<NestedMdpAgent>(m, ctx.seat, spec.count("k", d.level), spec.count("h", d.mdp_horizon),
                                                std::vector<double>{}, ctx.workers);
    if (spec.kind == "maximin") return std::make_unique<MaximinAgent>(m, ctx.seat, spec.count("h", d.mdp_horizon));
    if (spec.kind == "pomdp" || spec.kind == "ipomdp-lite") {
        const int level = spec.kind == "pomdp" ? -1 : static_cast<int>(spec.count("k", d.level));
        const std::size_t h = spec.count("h", d.pomdp_horizon);
        auto plan = make_pomdp_plan(m, ctx.seat, level, h, spec.count("B", d.beliefs), ctx.seed, spec.count("nh", h),
                                    ctx.workers);
        return std::make_unique<PomdpAgent>(plan, ctx.seat, spec.to_string());
    }
    if (spec.kind == "hybrid") {
        const double p = spec.number("p", 0.5);
        auto mdp = std::make_unique<NestedMdpAgent>(m, ctx.seat, 0, spec.count("mh", d.mdp_horizon),
                                                    std::vector<double>{}, ctx.workers);
        auto plan = make_pomdp_plan(m, ctx.seat, -1, spec.count("h", d.pomdp_horizon), spec.count("B", d.beliefs),
                                    ctx.seed, 0, ctx.workers);
        return std::make_unique<HybridAgent>(p, std::move(mdp), std::make_unique<PomdpAgent>(plan, ctx.seat, "pomdp"));
    }
    if (spec.kind == "handbuilt") {
        if (!ctx.soccer) throw std::invalid_argument("handbuilt agent needs the soccer environment");
        HandbuiltParams params;
        params.stand_probability = spec.number("stand", params.stand_probability);
        params.distance_scale = spec.number("dmax", static_cast<double>(ctx.soccer->spec().cols));
        params.far_ahead = static_cast<int>(spec.count("ahead", static_cast<std::size_t>(params.far_ahead)));
        return std::make_unique<HandbuiltSoccerAgent>(*ctx.soccer, ctx.seat, params);
    }
    if (spec.kind == "driver") {
        if (!ctx.accident_state) throw std::invalid_argument("driver agent needs the intersection environment");
        if (ctx.seat != Seat::other) throw std::invalid_argument("driver agent plays the other seat");
        return std::make_unique<ScriptedDriverAgent>(ctx.model, *ctx.accident_state, spec.number("temp", 0.1));
    }
    throw std::invalid_argument("unknown agent kind '" + spec.kind + "'");
}

inline std::unique_ptr<Agent> make_agent(const std::string& text, const AgentContext& ctx) {
    return make_agent(parse_agent_spec(text), ctx);
}

}  // namespace iplite
