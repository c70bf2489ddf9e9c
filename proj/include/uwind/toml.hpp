#pragma once

#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "uwind/errors.hpp"

namespace uwind {

/// Minimal TOML subset: [table] headers, key = value lines, # comments.
/// Values: "strings", booleans, numbers, and flat arrays of numbers.
/// Keys are flattened to "table.key".
class TomlTable {
public:
    using Value = std::variant<std::string, double, bool, std::vector<double>>;

    bool contains(const std::string& key) const { return values_.count(key) > 0; }

    double number(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (const double* v = std::get_if<double>(&it->second)) return *v;
        throw config_error("config: '" + key + "' must be a number");
    }

    int integer(const std::string& key, int fallback) const {
        const double v = number(key, static_cast<double>(fallback));
        const int i = static_cast<int>(v);
        if (static_cast<double>(i) != v)
            throw config_error("config: '" + key + "' must be an integer");
        return i;
    }

    bool boolean(const std::string& key, bool fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (const bool* v = std::get_if<bool>(&it->second)) return *v;
        throw config_error("config: '" + key + "' must be a boolean");
    }

    std::string text(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (const std::string* v = std::get_if<std::string>(&it->second)) return *v;
        throw config_error("config: '" + key + "' must be a string");
    }

    std::vector<double> numbers(const std::string& key,
                                const std::vector<double>& fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (const auto* v = std::get_if<std::vector<double>>(&it->second)) return *v;
        if (const double* s = std::get_if<double>(&it->second)) return {*s};
        throw config_error("config: '" + key + "' must be an array of numbers");
    }

    void set(const std::string& key, Value v) { values_[key] = std::move(v); }

    const std::map<std::string, Value>& all() const { return values_; }

private:
    std::map<std::string, Value> values_;
};

namespace detail {

inline std::string toml_trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t n = 0; n < line.size(); ++n) {
        if (line[n] == '"') in_string = !in_string;
        if (line[n] == '#' && !in_string) return line.substr(0, n);
    }
    return line;
}

inline TomlTable::Value parse_toml_value(const std::string& raw, int line_no) {
    const std::string v = toml_trim(raw);
    if (v.empty())
        throw config_error("config line " + std::to_string(line_no) + ": missing value");
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"')
            throw config_error("config line " + std::to_string(line_no) +
                               ": unterminated string");
        return v.substr(1, v.size() - 2);
    }
    if (v == "true") return true;
    if (v == "false") return false;
    if (v.front() == '[') {
        if (v.back() != ']')
            throw config_error("config line " + std::to_string(line_no) +
                               ": unterminated array");
        std::vector<double> arr;
        std::string body = v.substr(1, v.size() - 2);
        std::stringstream ss(body);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = toml_trim(item);
            if (item.empty()) continue;
            std::size_t used = 0;
            double num = 0.0;
            try {
                num = std::stod(item, &used);
            } catch (const std::exception&) {
                throw config_error("config line " + std::to_string(line_no) +
                                   ": bad array element '" + item + "'");
            }
            if (used != item.size())
                throw config_error("config line " + std::to_string(line_no) +
                                   ": bad array element '" + item + "'");
            arr.push_back(num);
        }
        return arr;
    }
    std::size_t used = 0;
    double num = 0.0;
    try {
        num = std::stod(v, &used);
    } catch (const std::exception&) {
        throw config_error("config line " + std::to_string(line_no) +
                           ": bad value '" + v + "'");
    }
    if (used != v.size())
        throw config_error("config line " + std::to_string(line_no) + ": bad value '" +
                           v + "'");
    return num;
}

} // namespace detail

inline TomlTable parse_toml(std::istream& in) {
    TomlTable table;
    std::string prefix;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::toml_trim(detail::strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw config_error("config line " + std::to_string(line_no) +
                                   ": unterminated table header");
            prefix = detail::toml_trim(line.substr(1, line.size() - 2));
            if (prefix.empty())
                throw config_error("config line " + std::to_string(line_no) +
                                   ": empty table name");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("config line " + std::to_string(line_no) +
                               ": expected key = value");
        const std::string key = detail::toml_trim(line.substr(0, eq));
        if (key.empty())
            throw config_error("config line " + std::to_string(line_no) + ": empty key");
        const std::string full = prefix.empty() ? key : prefix + "." + key;
        table.set(full, detail::parse_toml_value(line.substr(eq + 1), line_no));
    }
    return table;
}

inline TomlTable parse_toml_string(const std::string& text) {
    std::istringstream ss(text);
    return parse_toml(ss);
}

inline TomlTable parse_toml_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("config: cannot open '" + path + "'");
    return parse_toml(in);
}

} // namespace uwind
