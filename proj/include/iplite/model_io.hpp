#pragma once

// Text serialization for PosgModel.
//
//   iplite-model 1
//   states 2
//   actions_self 2
//   actions_other 2
//   observations 2
//   discount 0.95
//   zero_sum 1
//   T            # dense: one line of |S| numbers per (s, u, v)
//   ...
//   T sparse 12  # or sparse: "s u v s' p" per line
//   Z ...        # one line of |O| numbers per (s', u)
//   R ...        # one line of |V| numbers per (s, u)
//   b0 ...
//   end
//
// Optional sections: observations_other + Z_other, discount_other,
// R_other, legal_self, legal_other. Numbers are written as shortest
// round-trip decimals, so save(load(text)) reproduces text written by save
// exactly.

#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "iplite/core/text.hpp"
#include "iplite/model.hpp"

namespace iplite {

inline constexpr int kModelFormatVersion = 1;
// Rows whose sum is off by more than this are rejected instead of renormalized.
inline constexpr double kRenormalizeLimit = 1e-6;

namespace detail {

// Rescales a row that is off by at most kRenormalizeLimit. Rows already
// within kProbabilityTolerance are left untouched so text round-trips.
inline void renormalize_row(std::span<double> row, std::size_t line, const std::string& what) {
    double total = 0.0;
    for (double p : row) {
        if (!(p >= 0.0 && p <= 1.0 + kRenormalizeLimit))
            throw ParseError(line, what + ": probability " + format_shortest(p) + " out of range");
        total += p;
    }
    const double deficit = 1.0 - total;
    if (std::abs(deficit) > kRenormalizeLimit)
        throw ParseError(line, what + ": row sums to " + format_shortest(total));
    if (std::abs(deficit) > kProbabilityTolerance)
        for (auto& p : row) p /= total;
}

inline std::vector<double> read_numbers(TokenStream& ts, std::size_t count) {
    std::vector<double> out(count);
    for (auto& x : out) x = ts.next_double();
    return out;
}

inline std::vector<double> read_distributions(TokenStream& ts, std::size_t rows, std::size_t width,
                                              const std::string& name) {
    std::vector<double> out(rows * width);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t line = ts.line();
        for (std::size_t k = 0; k < width; ++k) out[r * width + k] = ts.next_double();
        renormalize_row(std::span<double>(out.data() + r * width, width), line,
                        name + " row " + std::to_string(r));
    }
    return out;
}

inline std::vector<std::uint8_t> read_mask(TokenStream& ts, std::size_t count, const std::string& name) {
    std::vector<std::uint8_t> out(count);
    for (auto& x : out) {
        Token t = ts.next();
        if (t.text != "0" && t.text != "1") throw ParseError(t.line, name + ": expected 0 or 1, found '" + t.text + "'");
        x = t.text == "1";
    }
    return out;
}

inline void write_rows(std::ostream& out, std::span<const double> data, std::size_t width) {
    for (std::size_t i = 0; i < data.size(); i += width) {
        for (std::size_t k = 0; k < width; ++k) out << (k ? " " : "") << format_shortest(data[i + k]);
        out << '\n';
    }
}

template <class T>
void write_mask(std::ostream& out, const std::vector<T>& mask, std::size_t width) {
    for (std::size_t i = 0; i < mask.size(); i += width) {
        for (std::size_t k = 0; k < width; ++k) out << (k ? " " : "") << int(mask[i + k]);
        out << '\n';
    }
}

}  // namespace detail

inline PosgModel read_model(std::istream& in) {
    TokenStream ts(in);
    ts.expect("iplite-model");
    {
        const std::size_t line = ts.line();
        auto version = ts.next_uint();
        if (version != kModelFormatVersion)
            throw ParseError(line, "unsupported model format version " + std::to_string(version));
    }
    PosgModel m;
    auto header = [&](const char* key) {
        ts.expect(key);
        return static_cast<std::size_t>(ts.next_uint());
    };
    m.num_states = header("states");
    m.num_actions_self = header("actions_self");
    m.num_actions_other = header("actions_other");
    m.num_observations = header("observations");
    if (ts.peek().text == "observations_other") {
        ts.next();
        m.num_observations_other = static_cast<std::size_t>(ts.next_uint());
    }
    ts.expect("discount");
    {
        const std::size_t line = ts.line();
        m.discount = ts.next_double();
        if (!(m.discount > 0.0 && m.discount < 1.0))
            throw ParseError(line, "discount must lie strictly inside (0, 1)");
    }
    if (ts.peek().text == "discount_other") {
        ts.next();
        const std::size_t line = ts.line();
        m.discount_other = ts.next_double();
        if (!(*m.discount_other >= 0.0 && *m.discount_other < 1.0))
            throw ParseError(line, "discount_other must lie in [0, 1)");
    }
    ts.expect("zero_sum");
    m.zero_sum = ts.next_uint() != 0;

    const std::size_t S = m.num_states, U = m.num_actions_self, V = m.num_actions_other;
    if (S == 0 || U == 0 || V == 0 || m.num_observations == 0)
        throw ParseError(ts.line(), "model dimensions must be positive");

    // Transition section.
    {
        ts.expect("T");
        if (ts.peek().text == "sparse") {
            ts.next();
            const std::size_t count = ts.next_uint();
            std::vector<std::vector<Transition>> rows(S * U * V);
            std::vector<std::size_t> row_line(S * U * V, 0);
            for (std::size_t i = 0; i < count; ++i) {
                const std::size_t line = ts.line();
                std::size_t s = ts.next_uint(), u = ts.next_uint(), v = ts.next_uint(), n = ts.next_uint();
                double p = ts.next_double();
                if (s >= S || u >= U || v >= V || n >= S) throw ParseError(line, "T entry index out of range");
                const std::size_t r = m.row_index(s, u, v);
                rows[r].push_back({n, p});
                row_line[r] = line;
            }
            m.transition.reserve(rows.size(), count);
            for (std::size_t r = 0; r < rows.size(); ++r) {
                std::vector<double> probs;
                for (auto& t : rows[r]) probs.push_back(t.prob);
                detail::renormalize_row(probs, row_line[r] ? row_line[r] : ts.line(),
                                        "T row " + std::to_string(r));
                for (std::size_t i = 0; i < probs.size(); ++i) rows[r][i].prob = probs[i];
                m.transition.push_row(rows[r]);
            }
        } else {
            std::vector<Transition> row;
            for (std::size_t r = 0; r < S * U * V; ++r) {
                const std::size_t line = ts.line();
                std::vector<double> probs = detail::read_numbers(ts, S);
                detail::renormalize_row(probs, line, "T row " + std::to_string(r));
                row.clear();
                for (std::size_t n = 0; n < S; ++n)
                    if (probs[n] != 0.0) row.push_back({n, probs[n]});
                m.transition.push_row(row);
            }
        }
    }

    ts.expect("Z");
    m.observation = detail::read_distributions(ts, S * U, m.num_observations, "Z");
    if (m.num_observations_other > 0) {
        ts.expect("Z_other");
        m.observation_other = detail::read_distributions(ts, S * V, m.num_observations_other, "Z_other");
    }
    ts.expect("R");
    m.reward = detail::read_numbers(ts, S * U * V);
    if (ts.peek().text == "R_other") {
        ts.next();
        m.reward_other = detail::read_numbers(ts, S * U * V);
    }
    ts.expect("b0");
    {
        const std::size_t line = ts.line();
        m.initial_belief = detail::read_numbers(ts, S);
        detail::renormalize_row(m.initial_belief, line, "b0");
    }
    if (ts.peek().text == "legal_self") {
        ts.next();
        m.legal_self = detail::read_mask(ts, S * U, "legal_self");
    }
    if (ts.peek().text == "legal_other") {
        ts.next();
        m.legal_other = detail::read_mask(ts, S * V, "legal_other");
    }
    ts.expect("end");
    if (!ts.done()) throw ParseError(ts.line(), "trailing content after 'end'");

    auto report = validate_model(m);
    if (!report.ok()) throw ParseError(ts.line(), "model invalid: " + report.violations.front().describe());
    return m;
}

// Dense transition output is used while the full tensor stays small.
inline void write_model(std::ostream& out, const PosgModel& m) {
    const std::size_t S = m.num_states, U = m.num_actions_self, V = m.num_actions_other;
    out << "iplite-model " << kModelFormatVersion << '\n';
    out << "states " << S << '\n';
    out << "actions_self " << U << '\n';
    out << "actions_other " << V << '\n';
    out << "observations " << m.num_observations << '\n';
    if (m.num_observations_other > 0) out << "observations_other " << m.num_observations_other << '\n';
    out << "discount " << format_shortest(m.discount) << '\n';
    if (m.discount_other) out << "discount_other " << format_shortest(*m.discount_other) << '\n';
    out << "zero_sum " << (m.zero_sum ? 1 : 0) << '\n';

    const bool dense = static_cast<double>(S) * U * V * S <= 1e6;
    if (dense) {
        out << "T\n";
        std::vector<double> row(S);
        for (std::size_t r = 0; r < S * U * V; ++r) {
            std::fill(row.begin(), row.end(), 0.0);
            for (const auto& t : m.transition.row(r)) row[t.next] += t.prob;
            detail::write_rows(out, row, S);
        }
    } else {
        out << "T sparse " << m.transition.nonzeros() << '\n';
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t u = 0; u < U; ++u)
                for (std::size_t v = 0; v < V; ++v)
                    for (const auto& t : m.next_states(s, u, v))
                        out << s << ' ' << u << ' ' << v << ' ' << t.next << ' ' << format_shortest(t.prob) << '\n';
    }
    out << "Z\n";
    detail::write_rows(out, m.observation, m.num_observations);
    if (m.num_observations_other > 0) {
        out << "Z_other\n";
        detail::write_rows(out, m.observation_other, m.num_observations_other);
    }
    out << "R\n";
    detail::write_rows(out, m.reward, V);
    if (!m.reward_other.empty()) {
        out << "R_other\n";
        detail::write_rows(out, m.reward_other, V);
    }
    out << "b0\n";
    detail::write_rows(out, m.initial_belief, S);
    if (!m.legal_self.empty()) {
        out << "legal_self\n";
        detail::write_mask(out, m.legal_self, U);
    }
    if (!m.legal_other.empty()) {
        out << "legal_other\n";
        detail::write_mask(out, m.legal_other, V);
    }
    out << "end\n";
}

inline std::string model_to_string(const PosgModel& m) {
    std::ostringstream os;
    write_model(os, m);
    return os.str();
}

inline PosgModel model_from_string(const std::string& text) {
    std::istringstream is(text);
    return read_model(is);
}

inline PosgModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
    return read_model(in);
}

inline void save_model(const std::string& path, const PosgModel& m) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model file '" + path + "'");
    write_model(out, m);
}

}  // namespace iplite
