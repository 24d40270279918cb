#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

namespace qc {

// Flat typed key-value format with [sections]: strings in double quotes,
// integers, reals, booleans and single-line arrays of scalars. Keys and
// sections are checked against a fixed schema at parse time.
struct ConfigValue {
    using Scalar = std::variant<std::string, long long, double, bool>;
    std::variant<std::string, long long, double, bool, std::vector<Scalar>> value;
    int line = 0;
};

class Config {
public:
    static Config parse(const std::string& text);
    static Config load(const std::string& path);

    bool has(const std::string& section, const std::string& key) const;
    int line(const std::string& section, const std::string& key) const;

    std::string get_string(const std::string& section, const std::string& key, const std::string& fallback) const;
    double get_real(const std::string& section, const std::string& key, double fallback) const;
    long long get_int(const std::string& section, const std::string& key, long long fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    std::vector<double> get_reals(const std::string& section, const std::string& key,
                                  const std::vector<double>& fallback) const;
    std::vector<long long> get_ints(const std::string& section, const std::string& key,
                                    const std::vector<long long>& fallback) const;
    std::vector<std::string> get_strings(const std::string& section, const std::string& key,
                                         const std::vector<std::string>& fallback) const;

    // command-line overrides; the value is type-checked like a parsed one
    void set(const std::string& section, const std::string& key, const std::string& literal);

private:
    const ConfigValue* find(const std::string& section, const std::string& key) const;
    std::map<std::string, std::map<std::string, ConfigValue>> data_;
};

// schema listing: "section.key" entries, for documentation and tests
std::vector<std::string> config_keys();

} // namespace qc
