#pragma once

// The iplite command line: validate, solve, simulate, verify and bench.
// Every subcommand except validate reads one experiment config, writes its
// artifacts under --out with file names prefixed by the config hash, and
// drops a manifest next to them.
//
// Exit codes: 0 success, 1 failed check or invariant, 2 bad input.

#include <CLI11.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "iplite/agent_spec.hpp"
#include "iplite/arena.hpp"
#include "iplite/bench.hpp"
#include "iplite/config.hpp"
#include "iplite/environments/intersection.hpp"
#include "iplite/environments/random_posg.hpp"
#include "iplite/environments/soccer.hpp"
#include "iplite/ipomdp_lite.hpp"
#include "iplite/model_io.hpp"
#include "iplite/nested_mdp.hpp"
#include "iplite/verify.hpp"

namespace iplite {

inline constexpr const char* kToolVersion = "1.0.0";

enum ExitCode : int { exit_ok = 0, exit_check_failed = 1, exit_bad_input = 2 };

// ---------------------------------------------------------------------------
// Models from configs

struct BuiltModel {
    std::string kind;  // random_posg, tiny, intersection, soccer, file
    std::shared_ptr<const PosgModel> model;
    std::optional<SoccerLayout> soccer;
    std::optional<IntersectionLayout> intersection;
};

inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "seed", "model", "model_path", "model_seed", "states", "actions", "observations", "peak", "observation_mode",
        "discount", "reward_lo", "reward_hi", "grid_size", "delay_cost", "accident_cost", "hv_delay_cost",
        "hv_discount", "rows", "cols", "draw_probability", "agent", "agent_a", "agent_b", "seat", "competitions",
        "stages", "stage_discount", "episodes", "max_steps", "games", "mdp_horizon", "pomdp_horizon", "beliefs",
        "level", "check", "trials", "horizon", "eps_grid", "sweeps", "sweep", "values", "repeats", "bench_level",
        "bench_horizon"};
    return keys;
}

inline BuiltModel build_model(const ExperimentConfig& c) {
    BuiltModel b;
    b.kind = c.string("model", "random_posg");
    if (b.kind == "random_posg") {
        RandomPosgSpec spec;
        spec.states = c.count("states", spec.states);
        spec.actions = c.count("actions", spec.actions);
        spec.observations = c.count("observations", spec.observations);
        spec.peak = c.number("peak", spec.peak);
        const std::string mode = c.string("observation_mode", "pairs");
        if (mode == "pairs") spec.mode = ObservationMode::unique_plus_pairs;
        else if (mode == "unique") spec.mode = ObservationMode::all_unique;
        else throw ConfigError(c.origin() + ": observation_mode must be 'pairs' or 'unique'");
        spec.discount = c.number("discount", spec.discount);
        spec.reward_lo = c.number("reward_lo", spec.reward_lo);
        spec.reward_hi = c.number("reward_hi", spec.reward_hi);
        spec.seed = c.has("model_seed") ? c.uint_value("model_seed") : c.seed();
        b.model = std::make_shared<const PosgModel>(generate_random_posg(spec));
    } else if (b.kind == "tiny") {
        TinyModelSpec spec;
        spec.states = c.count("states", spec.states);
        spec.actions_self = spec.actions_other = c.count("actions", spec.actions_self);
        spec.observations = c.count("observations", spec.observations);
        spec.discount = c.number("discount", spec.discount);
        spec.seed = c.has("model_seed") ? c.uint_value("model_seed") : c.seed();
        b.model = std::make_shared<const PosgModel>(generate_tiny_model(spec));
    } else if (b.kind == "intersection") {
        IntersectionSpec spec;
        spec.size = c.count("grid_size", spec.size);
        spec.delay_cost = c.number("delay_cost", spec.delay_cost);
        spec.accident_cost = c.number("accident_cost", spec.accident_cost);
        spec.discount = c.number("discount", spec.discount);
        spec.hv_delay_cost = c.number("hv_delay_cost", spec.hv_delay_cost);
        spec.hv_discount = c.number("hv_discount", spec.hv_discount);
        b.intersection.emplace(spec);
        b.model = std::make_shared<const PosgModel>(build_intersection(spec));
    } else if (b.kind == "soccer") {
        SoccerSpec spec;
        spec.rows = static_cast<int>(c.count("rows", static_cast<std::size_t>(spec.rows)));
        spec.cols = static_cast<int>(c.count("cols", static_cast<std::size_t>(spec.cols)));
        spec.draw_probability = c.number("draw_probability", spec.draw_probability);
        spec.discount = c.number("discount", spec.discount);
        b.soccer.emplace(spec);
        b.model = std::make_shared<const PosgModel>(build_soccer(spec));
    } else if (b.kind == "file") {
        std::filesystem::path p = c.string("model_path");
        if (p.is_relative() && c.origin() != "<config>") p = std::filesystem::path(c.origin()).parent_path() / p;
        if (!std::filesystem::exists(p)) throw ConfigError(c.origin() + ": model file " + p.string() + " does not exist");
        b.model = std::make_shared<const PosgModel>(load_model(p.string()));
    } else {
        throw ConfigError(c.origin() + ": unknown model '" + b.kind + "'");
    }
    require_valid(*b.model);
    return b;
}

inline AgentDefaults agent_defaults(const ExperimentConfig& c) {
    AgentDefaults d;
    d.mdp_horizon = c.count("mdp_horizon", d.mdp_horizon);
    d.pomdp_horizon = c.count("pomdp_horizon", d.pomdp_horizon);
    d.beliefs = c.count("beliefs", d.beliefs);
    d.level = c.count("level", d.level);
    return d;
}

inline AgentContext agent_context(const ExperimentConfig& c, const BuiltModel& b, Seat seat, std::size_t workers) {
    AgentContext ctx;
    ctx.model = b.model;
    ctx.seat = seat;
    ctx.seed = derive_seed(c.seed(), seat == Seat::self ? 0xA1u : 0xA2u);
    ctx.workers = workers;
    ctx.defaults = agent_defaults(c);
    ctx.soccer = b.soccer;
    if (b.intersection) ctx.accident_state = b.intersection->accident_state();
    return ctx;
}

// ---------------------------------------------------------------------------
// Output files

class OutputDir {
public:
    OutputDir(const std::string& dir, const ExperimentConfig& c) : dir_(dir), prefix_(c.hash_hex()) {
        std::filesystem::create_directories(dir_);
    }

    std::string path(const std::string& suffix) const { return (dir_ / (prefix_ + "_" + suffix)).string(); }

    template <class Fn>
    std::string write(const std::string& suffix, Fn&& fn) {
        const std::string p = path(suffix);
        std::ofstream out(p);
        if (!out) throw std::runtime_error("cannot write " + p);
        fn(out);
        files_.push_back(p);
        return p;
    }

    const std::vector<std::string>& files() const { return files_; }

private:
    std::filesystem::path dir_;
    std::string prefix_;
    std::vector<std::string> files_;
};

inline void write_manifest(OutputDir& out, const std::string& command, const ExperimentConfig& c,
                           std::size_t workers) {
    std::vector<std::string> files = out.files();
    out.write("manifest.txt", [&](std::ostream& os) {
        os << "iplite-manifest 1\n";
        os << "tool_version " << kToolVersion << '\n';
        os << "model_format " << kModelFormatVersion << '\n';
        os << "value_format " << kValueFormatVersion << '\n';
        os << "nested_format " << kNestedFormatVersion << '\n';
        os << "command " << command << '\n';
        os << "config " << c.origin() << '\n';
        os << "config_hash " << c.hash_hex() << '\n';
        os << "seed " << c.seed() << '\n';
        os << "workers " << workers << '\n';
        for (const auto& f : files) os << "output " << std::filesystem::path(f).filename().string() << '\n';
        os << "begin_config\n" << c.text();
        if (!c.text().empty() && c.text().back() != '\n') os << '\n';
        os << "end_config\n";
    });
}

// ---------------------------------------------------------------------------
// Subcommands

struct CommandIo {
    std::ostream& out;
    std::ostream& err;
    std::string out_dir = "out";
    std::size_t workers = 1;
};

inline int command_validate(const std::string& path, CommandIo& io) {
    PosgModel m;
    try {
        m = load_model(path);
    } catch (const ParseError& e) {
        io.err << path << ": " << e.what() << '\n';
        return exit_bad_input;
    }
    const auto rep = validate_model(m);
    if (!rep.ok()) {
        for (const auto& v : rep.violations) io.err << path << ": " << v.describe() << '\n';
        return exit_bad_input;
    }
    io.out << path << ": ok (" << m.num_states << " states, " << m.num_actions_self << "x" << m.num_actions_other
           << " actions, " << m.num_observations << " observations)\n";
    return exit_ok;
}

inline int command_solve(const ExperimentConfig& c, CommandIo& io) {
    const BuiltModel b = build_model(c);
    const std::string seat_name = c.string("seat", "self");
    if (seat_name != "self" && seat_name != "other") throw ConfigError(c.origin() + ": seat must be 'self' or 'other'");
    const Seat seat = seat_name == "self" ? Seat::self : Seat::other;
    const AgentSpec spec = parse_agent_spec(c.string("agent", c.string("agent_a", "ipomdp-lite")));
    const AgentDefaults d = agent_defaults(c);
    OutputDir out(io.out_dir, c);
    out.write("model.txt", [&](std::ostream& os) { write_model(os, *b.model); });
    if (spec.kind == "mdp" || spec.kind == "nested-mdp") {
        const std::size_t k = spec.kind == "mdp" ? 0 : spec.count("k", d.level);
        const auto stack = solve_nested(*b.model, seat, k, spec.count("h", d.mdp_horizon), {}, io.workers);
        out.write("policy.nested", [&](std::ostream& os) { write_nested(os, stack); });
        io.out << "solved " << spec.to_string() << " for seat " << seat_name << ": " << stack.q_tables.size()
               << " level tables\n";
    } else if (spec.kind == "pomdp" || spec.kind == "ipomdp-lite") {
        const int level = spec.kind == "pomdp" ? -1 : static_cast<int>(spec.count("k", d.level));
        const std::size_t h = spec.count("h", d.pomdp_horizon);
        const auto plan = make_pomdp_plan(*b.model, seat, level, h, spec.count("B", d.beliefs),
                                          derive_seed(c.seed(), 0xB0u), spec.count("nh", h), io.workers);
        out.write("policy.alpha", [&](std::ostream& os) { write_value_function(os, plan->value); });
        out.write("strategy.csv", [&](std::ostream& os) {
            os << "state";
            for (std::size_t v = 0; v < plan->strategy.num_actions(); ++v) os << ",p" << v;
            os << '\n';
            for (std::size_t s = 0; s < plan->strategy.num_states(); ++s) {
                os << s;
                for (double p : plan->strategy.row(s)) os << ',' << format_17g(p);
                os << '\n';
            }
        });
        io.out << "solved " << spec.to_string() << " for seat " << seat_name << ": " << plan->value.vectors.size()
               << " alpha vectors, value at b0 " << plan->value.value_of(Belief(plan->model.initial_belief)) << '\n';
    } else {
        throw ConfigError(c.origin() + ": solve supports mdp, nested-mdp, pomdp and ipomdp-lite agents");
    }
    write_manifest(out, "solve", c, io.workers);
    return exit_ok;
}

inline int command_simulate(const ExperimentConfig& c, CommandIo& io) {
    const BuiltModel b = build_model(c);
    OutputDir out(io.out_dir, c);
    if (b.intersection) {
        auto av = make_agent(c.string("agent_a", "nested-mdp:k=1"), agent_context(c, b, Seat::self, io.workers));
        auto driver = make_agent(c.string("agent_b", "driver"), agent_context(c, b, Seat::other, io.workers));
        const auto& spec = b.intersection->spec();
        EpisodeCosts costs{spec.delay_cost, spec.accident_cost,
                           static_cast<double>(b.intersection->min_clear_steps())};
        const auto run = run_intersection_episodes(*b.model, b.intersection->cleared_state(),
                                                   b.intersection->accident_state(), *av, *driver,
                                                   c.count("episodes", 800), c.seed(), costs,
                                                   c.count("max_steps", 200), io.workers);
        out.write("metrics.csv", [&](std::ostream& os) { write_metrics_csv(os, run.series); });
        out.write("episodes.csv", [&](std::ostream& os) { write_episodes_csv(os, run.episodes); });
        const auto& last = run.series.back();
        io.out << av->name() << " vs " << driver->name() << ": t=" << last.t << " T=" << last.T << " I=" << last.I
               << " M=" << last.M << '\n';
    } else if (b.soccer) {
        const auto& l = *b.soccer;
        auto a = make_agent(c.string("agent_a", "nested-mdp:k=1"), agent_context(c, b, Seat::self, io.workers));
        auto o = make_agent(c.string("agent_b", "handbuilt"), agent_context(c, b, Seat::other, io.workers));
        const auto tally = run_soccer_games(*b.model, l.a_scored_state(), l.b_scored_state(), l.draw_state(), *a, *o,
                                            c.count("games", 10000), c.seed(), c.count("max_steps", 1000),
                                            io.workers);
        out.write("games.csv", [&](std::ostream& os) { write_games_csv(os, tally); });
        out.write("summary.csv", [&](std::ostream& os) { write_soccer_summary_csv(os, tally, a->name(), o->name()); });
        io.out << a->name() << " vs " << o->name() << ": goals " << tally.a_goals << " to " << tally.b_goals
               << ", draws " << tally.draws << '\n';
    } else {
        auto a = make_agent(c.string("agent_a", "ipomdp-lite"), agent_context(c, b, Seat::self, io.workers));
        auto o = make_agent(c.string("agent_b", "mdp"), agent_context(c, b, Seat::other, io.workers));
        const auto r = run_tournament(*b.model, *a, *o, c.count("competitions", 1000), c.count("stages", 40),
                                      c.number("stage_discount", 0.95), c.seed(), io.workers);
        out.write("competitions.csv", [&](std::ostream& os) { write_competitions_csv(os, r); });
        out.write("summary.csv", [&](std::ostream& os) { write_summary_csv(os, r, a->name(), o->name()); });
        out.write("timings.csv", [&](std::ostream& os) { write_timings_csv(os, r); });
        io.out << a->name() << " vs " << o->name() << ": " << r.a.mean << " +- " << r.a.halfwidth << '\n';
    }
    write_manifest(out, "simulate", c, io.workers);
    return exit_ok;
}

inline int command_verify(const ExperimentConfig& c, CommandIo& io) {
    const std::string check = c.string("check");
    const std::uint64_t seed = c.seed();
    OutputDir out(io.out_dir, c);
    bool ok = true;
    BoundReport report;
    std::ostringstream note;
    if (check == "oracle") {
        report = check_oracle_equivalence(c.count("trials", 50), seed);
        ok = report.all_pass();
    } else if (check == "alpha_growth") {
        TinyModelSpec spec;
        spec.seed = seed;
        spec.states = c.count("states", 2);
        const PosgModel m = generate_tiny_model(spec);
        report = check_alpha_growth(m, StrategyTable::uniform(m.num_states, m.num_actions_other));
        ok = report.all_pass();
    } else if (check == "contraction") {
        report.name = "contraction";
        const std::size_t trials = c.count("trials", 10), sweeps = c.count("sweeps", 30);
        for (std::size_t t = 0; t < trials; ++t) {
            TinyModelSpec spec;
            spec.seed = derive_seed(seed, t);
            spec.states = c.count("states", 3);
            const PosgModel m = generate_tiny_model(spec);
            Rng rng(derive_seed(seed, 0x200000u + t));
            ContractionOptions options;
            options.workers = io.workers;
            auto one = check_contraction(m, random_strategy(m.num_states, m.num_actions_other, rng), sweeps,
                                         derive_seed(seed, 0x300000u + t), options);
            report.tolerance = std::max(report.tolerance, one.tolerance);
            for (auto r : one.rows) {
                r.trial = t;
                report.rows.push_back(r);
            }
        }
        ok = report.all_pass();
    } else if (check == "policy_loss") {
        TinyModelSpec spec;
        spec.seed = seed;
        spec.states = c.count("states", 3);
        const PosgModel m = generate_tiny_model(spec);
        PolicyLossOptions options;
        options.workers = io.workers;
        report = check_policy_loss_bound(m, c.count("horizon", 4), c.count("trials", 100), derive_seed(seed, 0x400000u),
                                         options);
        ok = report.all_pass();
    } else if (check == "level0_gap") {
        GapFamilySpec spec;
        spec.horizon = c.count("horizon", spec.horizon);
        spec.states = c.count("states", spec.states);
        const auto gap = check_level0_gap(c.numbers("eps_grid", {0.0, 0.05, 0.1, 0.2}), spec, seed);
        report = gap.bounds;
        ok = gap.ok();
        note << " zero_gap_ok=" << gap.zero_gap_ok << " monotone=" << gap.monotone
             << " fitted_slope=" << gap.fitted_slope << " fitted_constant=" << gap.fitted_constant;
    } else {
        throw ConfigError(c.origin() + ": unknown check '" + check +
                          "' (oracle, alpha_growth, contraction, policy_loss, level0_gap)");
    }
    out.write("verify_" + check + ".csv", [&](std::ostream& os) { write_bound_report_csv(os, report); });
    write_manifest(out, "verify", c, io.workers);
    io.out << check << ": " << report.passed() << "/" << report.rows.size() << " rows pass" << note.str() << " -> "
           << (ok ? "PASS" : "FAIL") << '\n';
    return ok ? exit_ok : exit_check_failed;
}

inline int command_bench(const ExperimentConfig& c, CommandIo& io) {
    const BuiltModel b = build_model(c);
    BenchSettings s;
    s.axis = parse_bench_axis(c.string("sweep", "h"));
    for (double x : c.numbers("values", s.axis == BenchAxis::horizon
                                            ? std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}
                                            : std::vector<double>{1, 2, 3, 4, 5})) {
        if (!(x >= 0.0) || x != static_cast<double>(static_cast<std::size_t>(x)))
            throw ConfigError(c.origin() + ": bench values must be nonnegative integers");
        s.values.push_back(static_cast<std::size_t>(x));
    }
    s.fixed_level = c.count("bench_level", s.fixed_level);
    s.fixed_horizon = c.count("bench_horizon", s.fixed_horizon);
    s.beliefs = c.count("beliefs", s.beliefs);
    s.repeats = c.count("repeats", s.repeats);
    s.seed = derive_seed(c.seed(), 0xB0u);
    s.workers = io.workers;
    const auto r = bench_planning(*b.model, s);
    OutputDir out(io.out_dir, c);
    out.write("bench_timings.csv", [&](std::ostream& os) { write_bench_csv(os, r); });
    write_manifest(out, "bench", c, io.workers);
    const auto fit = r.fit();
    io.out << "bench over " << (s.axis == BenchAxis::horizon ? "h" : "k") << ": slope " << fit.slope
           << " ms/step, R^2 " << fit.r_squared << ", relative spread " << r.relative_spread() << '\n';
    return exit_ok;
}

// ---------------------------------------------------------------------------
// Entry point

inline int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Nested MDP and I-POMDP Lite planning toolkit", "iplite"};
    app.require_subcommand(1);
    CommandIo io{out, err};
    std::string target;
    auto add = [&](const char* name, const char* help, const char* what) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option(what, target, std::string(what) == "model" ? "model file" : "experiment config")->required();
        sub->add_option("--out", io.out_dir, "output directory")->capture_default_str();
        sub->add_option("--workers", io.workers, "worker threads (0 = all cores)")->capture_default_str();
        return sub;
    };
    auto* validate = add("validate", "lint a model file", "model");
    auto* solve = add("solve", "solve one agent and write its policy file", "config");
    auto* simulate = add("simulate", "run a tournament, episode batch or game batch", "config");
    auto* verify = add("verify", "run a named bound check", "config");
    auto* bench = add("bench", "planning time over h or k", "config");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_bad_input;
    }
    try {
        if (validate->parsed()) return command_validate(target, io);
        const ExperimentConfig c = ExperimentConfig::load(target);
        c.require_known(config_keys());
        if (solve->parsed()) return command_solve(c, io);
        if (simulate->parsed()) return command_simulate(c, io);
        if (verify->parsed()) return command_verify(c, io);
        if (bench->parsed()) return command_bench(c, io);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_bad_input;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << '\n';
        return exit_bad_input;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return exit_bad_input;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_check_failed;
    }
    return exit_bad_input;
}

}  // namespace iplite
