#pragma once

// Flat `key = value` configuration with `#` comments.

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace hinf {

class Config {
public:
    static Config parse(const std::string& text);
    static Config load(const std::string& path);

    [[nodiscard]] bool has(const std::string& key) const;
    void set(const std::string& key, const std::string& value);

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    std::size_t get_count(const std::string& key, std::size_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    // Whitespace-separated numbers.
    std::vector<double> get_doubles(const std::string& key) const;
    std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;

    // Keys never read through a getter; used to reject typos.
    [[nodiscard]] std::vector<std::string> unused() const;

private:
    struct Value {
        std::string text;
        std::size_t line = 0;
    };
    const Value& at(const std::string& key) const;

    std::map<std::string, Value> values_;
    mutable std::set<std::string> used_;
};

} // namespace hinf
