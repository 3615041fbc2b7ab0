#include "hinf/config.hpp"

#include "hinf/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace hinf {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& tok, const std::string& key, std::size_t line) {
    double v = 0.0;
    const char* end = tok.data() + tok.size();
    auto [p, ec] = std::from_chars(tok.data(), end, v);
    if (ec != std::errc() || p != end) throw ParseError("key '" + key + "': bad number '" + tok + "'", line);
    return v;
}

} // namespace

Config Config::parse(const std::string& text) {
    Config c;
    std::istringstream is(text);
    std::string line;
    std::size_t n = 0;
    while (std::getline(is, line)) {
        ++n;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", n);
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ParseError("empty key", n);
        if (c.values_.count(key)) throw ParseError("duplicate key '" + key + "'", n);
        c.values_[key] = {trim(line.substr(eq + 1)), n};
    }
    return c;
}

Config Config::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InvalidInput("cannot open config " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse(ss.str());
}

bool Config::has(const std::string& key) const {
    auto it = values_.find(key);
    return it != values_.end() && !it->second.text.empty();
}

void Config::set(const std::string& key, const std::string& value) { values_[key] = {value, 0}; }

const Config::Value& Config::at(const std::string& key) const {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end() || it->second.text.empty()) throw InvalidInput("config: missing value for '" + key + "'");
    return it->second;
}

std::string Config::get_string(const std::string& key) const { return at(key).text; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    used_.insert(key);
    return has(key) ? at(key).text : fallback;
}

double Config::get_double(const std::string& key) const {
    const Value& v = at(key);
    return to_double(v.text, key, v.line);
}

double Config::get_double(const std::string& key, double fallback) const {
    used_.insert(key);
    return has(key) ? get_double(key) : fallback;
}

std::size_t Config::get_count(const std::string& key, std::size_t fallback) const {
    used_.insert(key);
    if (!has(key)) return fallback;
    const Value& v = at(key);
    std::size_t out = 0;
    const char* end = v.text.data() + v.text.size();
    auto [p, ec] = std::from_chars(v.text.data(), end, out);
    if (ec != std::errc() || p != end) throw ParseError("key '" + key + "': expected a count", v.line);
    return out;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    used_.insert(key);
    if (!has(key)) return fallback;
    const Value& v = at(key);
    if (v.text == "true" || v.text == "1" || v.text == "yes") return true;
    if (v.text == "false" || v.text == "0" || v.text == "no") return false;
    throw ParseError("key '" + key + "': expected true or false", v.line);
}

std::vector<double> Config::get_doubles(const std::string& key) const {
    const Value& v = at(key);
    std::istringstream is(v.text);
    std::vector<double> out;
    std::string tok;
    while (is >> tok) out.push_back(to_double(tok, key, v.line));
    return out;
}

std::vector<double> Config::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
    used_.insert(key);
    return has(key) ? get_doubles(key) : fallback;
}

std::vector<std::string> Config::unused() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
        if (!used_.count(k)) out.push_back(k);
    return out;
}

} // namespace hinf
