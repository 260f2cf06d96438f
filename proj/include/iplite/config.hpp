#pragma once

// Experiment configuration files: one "key value..." entry per line, '#'
// starts a comment. The whole text is hashed so outputs and manifests can
// be traced back to the exact configuration that produced them.
//
//   seed 1
//   model random_posg
//   agent_a ipomdp-lite:k=1,h=10,B=100
//   agent_b mdp
//   competitions 1000

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "iplite/core/text.hpp"

namespace iplite {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ExperimentConfig {
public:
    static ExperimentConfig parse(const std::string& text, const std::string& origin = "<config>") {
        ExperimentConfig c;
        c.text_ = text;
        c.origin_ = origin;
        std::istringstream in(text);
        std::string line;
        std::size_t number = 0;
        while (std::getline(in, line)) {
            ++number;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            std::istringstream words(line);
            std::string key;
            if (!(words >> key)) continue;
            std::string rest;
            std::getline(words, rest);
            const auto first = rest.find_first_not_of(" \t");
            const auto last = rest.find_last_not_of(" \t\r");
            rest = first == std::string::npos ? std::string() : rest.substr(first, last - first + 1);
            if (rest.empty()) throw ConfigError(origin + ":" + std::to_string(number) + ": key '" + key + "' has no value");
            if (!c.values_.emplace(key, Entry{rest, number}).second)
                throw ConfigError(origin + ":" + std::to_string(number) + ": key '" + key + "' given twice");
        }
        if (!c.has("seed")) throw ConfigError(origin + ": missing required key 'seed'");
        c.seed();  // validates the value
        return c;
    }

    static ExperimentConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config " + path);
        std::ostringstream text;
        text << in.rdbuf();
        return parse(text.str(), path);
    }

    const std::string& text() const { return text_; }
    const std::string& origin() const { return origin_; }
    std::uint64_t hash() const { return fnv1a(text_); }
    std::string hash_hex() const { return hex64(hash()); }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::uint64_t seed() const { return uint_value("seed"); }

    std::string string(const std::string& key) const { return entry(key).value; }

    std::string string(const std::string& key, const std::string& fallback) const {
        return has(key) ? string(key) : fallback;
    }

    double number(const std::string& key) const {
        const auto& e = entry(key);
        auto x = parse_double(e.value);
        if (!x) throw error(e, "'" + key + "' must be a number");
        return *x;
    }

    double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

    std::uint64_t uint_value(const std::string& key) const {
        const auto& e = entry(key);
        auto x = parse_uint(e.value);
        if (!x) throw error(e, "'" + key + "' must be a nonnegative integer");
        return *x;
    }

    std::size_t count(const std::string& key, std::size_t fallback) const {
        return has(key) ? static_cast<std::size_t>(uint_value(key)) : fallback;
    }

    std::vector<double> numbers(const std::string& key, std::vector<double> fallback = {}) const {
        if (!has(key)) return fallback;
        const auto& e = entry(key);
        std::istringstream in(e.value);
        std::vector<double> out;
        std::string word;
        while (in >> word) {
            auto x = parse_double(word);
            if (!x) throw error(e, "'" + key + "' holds a non-number '" + word + "'");
            out.push_back(*x);
        }
        return out;
    }

    std::vector<std::string> keys() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : values_) out.push_back(k);
        return out;
    }

    // Fails on any key outside `known`, so typos never pass silently.
    void require_known(const std::vector<std::string>& known) const {
        for (const auto& [k, e] : values_) {
            bool ok = false;
            for (const auto& x : known) ok = ok || x == k;
            if (!ok) throw error(e, "unknown key '" + k + "'");
        }
    }

private:
    struct Entry {
        std::string value;
        std::size_t line = 0;
    };

    const Entry& entry(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError(origin_ + ": missing key '" + key + "'");
        return it->second;
    }

    ConfigError error(const Entry& e, const std::string& what) const {
        return ConfigError(origin_ + ":" + std::to_string(e.line) + ": " + what);
    }

    std::string text_;
    std::string origin_;
    std::map<std::string, Entry> values_;
};

}  // namespace iplite
