#pragma once

// Flat "key = value" run configuration with dotted section prefixes.

#include "formheat/errors.hpp"

#include <cctype>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace formheat {

class Config {
public:
    struct Entry {
        std::string value;
        std::size_t line = 0;
    };

    /// Parses "key = value" lines; '#' starts a comment, blank lines are ignored.
    static Config parse(std::istream& in) {
        Config c;
        std::string raw;
        std::size_t line = 0;
        while (std::getline(in, raw)) {
            ++line;
            const std::string text = trim(raw.substr(0, raw.find('#')));
            if (text.empty()) continue;
            const auto eq = text.find('=');
            if (eq == std::string::npos) throw ParseError("expected 'key = value'", line);
            const std::string key = trim(text.substr(0, eq));
            const std::string value = trim(text.substr(eq + 1));
            if (key.empty()) throw ParseError("empty key", line);
            for (char ch : key)
                if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '_'))
                    throw ParseError("invalid character in key '" + key + "'", line);
            if (value.empty()) throw ParseError("missing value for key '" + key + "'", line);
            if (c.entries_.count(key)) throw ParseError("duplicate key '" + key + "'", line);
            c.entries_[key] = {value, line};
        }
        return c;
    }

    static Config parse_string(const std::string& text) {
        std::istringstream in(text);
        return parse(in);
    }

    static Config load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("config: file not found: " + path);
        return parse(in);
    }

    bool has(const std::string& key) const { return entries_.count(key) > 0; }
    const std::map<std::string, Entry>& entries() const { return entries_; }

    std::optional<std::string> get(const std::string& key) const {
        used_.insert(key);
        const auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        return it->second.value;
    }

    std::string string(const std::string& key, const std::string& fallback) const { return get(key).value_or(fallback); }

    std::string require(const std::string& key) const {
        const auto v = get(key);
        if (!v) throw ConfigError(key + ": missing required key");
        return *v;
    }

    double number(const std::string& key, double fallback) const {
        const auto v = get(key);
        return v ? to_number(key, *v) : fallback;
    }

    long integer(const std::string& key, long fallback) const {
        const auto v = get(key);
        if (!v) return fallback;
        const double x = to_number(key, *v);
        if (x != std::floor(x)) fail(key, "expected an integer");
        return static_cast<long>(x);
    }

    bool boolean(const std::string& key, bool fallback) const {
        const auto v = get(key);
        if (!v) return fallback;
        if (*v == "true" || *v == "1" || *v == "yes") return true;
        if (*v == "false" || *v == "0" || *v == "no") return false;
        fail(key, "expected a boolean");
    }

    /// Whitespace-separated numbers.
    std::vector<double> numbers(const std::string& key) const {
        const auto v = get(key);
        if (!v) return {};
        std::vector<double> out;
        std::istringstream in(*v);
        std::string tok;
        while (in >> tok) out.push_back(to_number(key, tok));
        return out;
    }

    /// Keys beginning with `prefix`.
    std::vector<std::string> keys_with_prefix(const std::string& prefix) const {
        std::vector<std::string> out;
        for (const auto& [k, e] : entries_)
            if (k.rfind(prefix, 0) == 0) out.push_back(k);
        return out;
    }

    /// Keys never read through an accessor.
    std::vector<std::string> unused_keys() const {
        std::vector<std::string> out;
        for (const auto& [k, e] : entries_)
            if (!used_.count(k)) out.push_back(k);
        return out;
    }

    std::size_t line_of(const std::string& key) const {
        const auto it = entries_.find(key);
        return it == entries_.end() ? 0 : it->second.line;
    }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        const std::size_t line = line_of(key);
        throw ConfigError(key + ": " + what + (line ? " (line " + std::to_string(line) + ")" : ""));
    }

private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    double to_number(const std::string& key, const std::string& text) const {
        std::size_t pos = 0;
        double x = 0.0;
        try {
            x = std::stod(text, &pos);
        } catch (const std::exception&) {
            fail(key, "expected a number, got '" + text + "'");
        }
        if (pos != text.size()) fail(key, "expected a number, got '" + text + "'");
        return x;
    }

    std::map<std::string, Entry> entries_;
    mutable std::set<std::string> used_;
};

} // namespace formheat
