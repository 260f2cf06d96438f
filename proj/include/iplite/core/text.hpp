#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace iplite {

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Shortest decimal text that round-trips to the same double.
inline std::string format_shortest(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

inline std::string format_17g(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::optional<double> parse_double(std::string_view s) {
    double value = 0.0;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

inline std::optional<std::uint64_t> parse_uint(std::string_view s) {
    std::uint64_t value = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

// 64-bit FNV-1a; stable across platforms, used for config hashes.
inline std::uint64_t fnv1a(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

// One CSV field, quoted when it holds a comma, quote or line break.
inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

struct Token {
    std::string text;
    std::size_t line = 0;
};

// Whitespace tokenizer over the shared text format: '#' starts a comment
// that runs to end of line. Tokens remember their line for diagnostics.
class TokenStream {
public:
    explicit TokenStream(std::istream& in) {
        std::string line;
        std::size_t number = 0;
        while (std::getline(in, line)) {
            ++number;
            if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
            std::istringstream words(line);
            std::string w;
            while (words >> w) tokens_.push_back({w, number});
        }
        last_line_ = number;
    }

    bool done() const { return pos_ >= tokens_.size(); }

    const Token& peek() const {
        if (done()) throw ParseError(last_line_, "unexpected end of input");
        return tokens_[pos_];
    }

    Token next() {
        const Token& t = peek();
        ++pos_;
        return t;
    }

    void expect(std::string_view word) {
        Token t = next();
        if (t.text != word)
            throw ParseError(t.line, "expected '" + std::string(word) + "', found '" + t.text + "'");
    }

    double next_double() {
        Token t = next();
        auto v = parse_double(t.text);
        if (!v) throw ParseError(t.line, "expected a number, found '" + t.text + "'");
        return *v;
    }

    std::uint64_t next_uint() {
        Token t = next();
        auto v = parse_uint(t.text);
        if (!v) throw ParseError(t.line, "expected a nonnegative integer, found '" + t.text + "'");
        return *v;
    }

    std::size_t line() const { return done() ? last_line_ : tokens_[pos_].line; }

private:
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    std::size_t last_line_ = 0;
};

}  // namespace iplite
