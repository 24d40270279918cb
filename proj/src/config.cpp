#include "qc/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qc/error.hpp"

namespace qc {

namespace {

enum class Kind { str, integer, real, boolean, reals, ints, strs };
enum class Rule { none, positive, nonneg };

struct KeySpec {
    Kind kind;
    Rule rule = Rule::none;
};

using Schema = std::map<std::string, std::map<std::string, KeySpec>>;

const Schema& schema()
{
    static const Schema s = {
        {"",
         {{"experiment", {Kind::str}}, {"seed", {Kind::integer, Rule::nonneg}}, {"description", {Kind::str}}}},
        {"system",
         {{"kind", {Kind::str}},
          {"matrix", {Kind::ints}},
          {"fiber", {Kind::str}},
          {"fiber_amplitude", {Kind::real}},
          {"fiber_k", {Kind::ints}},
          {"roof", {Kind::real, Rule::positive}},
          {"roof_formula", {Kind::str}},
          {"roof_amplitude", {Kind::real}},
          {"roof_k", {Kind::ints}},
          {"time", {Kind::real, Rule::positive}},
          {"base_kind", {Kind::str}},
          {"field", {Kind::str}},
          {"field_formula", {Kind::strs}},
          {"field_k", {Kind::ints}},
          {"field_coef", {Kind::reals}},
          {"amplitude", {Kind::real}},
          {"splitting", {Kind::str}}}},
        {"perturbation",
         {{"kind", {Kind::str}},
          {"amplitude", {Kind::real}},
          {"amplitudes", {Kind::reals}},
          {"formula", {Kind::str}},
          {"k", {Kind::ints}},
          {"field", {Kind::str}},
          {"field_formula", {Kind::strs}},
          {"field_k", {Kind::ints}},
          {"field_coef", {Kind::reals}},
          {"time", {Kind::real, Rule::positive}},
          {"splitting", {Kind::str}}}},
        {"solver",
         {{"epsilon", {Kind::real, Rule::positive}},
          {"resolution", {Kind::integer, Rule::nonneg}},
          {"fixpoint_tol", {Kind::real, Rule::positive}},
          {"max_iterations", {Kind::integer, Rule::positive}},
          {"neumann_depth", {Kind::integer, Rule::positive}},
          {"residual_sample_count", {Kind::integer, Rule::positive}},
          {"residual_tol", {Kind::real, Rule::positive}},
          {"L_margin", {Kind::real, Rule::positive}},
          {"safety_factor", {Kind::real, Rule::positive}},
          {"lipschitz_samples", {Kind::integer, Rule::positive}},
          {"uniqueness", {Kind::boolean}},
          {"leaf_samples", {Kind::integer, Rule::positive}},
          {"leaf_pairs", {Kind::integer, Rule::positive}}}},
        {"contract",
         {{"pairs", {Kind::integer, Rule::positive}},
          {"radius", {Kind::real, Rule::positive}},
          {"ph_samples", {Kind::integer, Rule::positive}},
          {"resolution", {Kind::integer, Rule::positive}},
          {"eps_list", {Kind::reals, Rule::positive}},
          {"amplitude_list", {Kind::reals, Rule::positive}}}},
        {"entropy",
         {{"r", {Kind::real, Rule::positive}},
          {"n_max", {Kind::integer, Rule::positive}},
          {"samples", {Kind::integer, Rule::positive}},
          {"segment_cap", {Kind::real, Rule::positive}},
          {"max_vertices", {Kind::integer, Rule::positive}},
          {"bowen", {Kind::boolean}},
          {"bowen_n", {Kind::integer, Rule::positive}},
          {"epsilon_list", {Kind::reals, Rule::positive}},
          {"bowen_budget", {Kind::integer, Rule::positive}},
          {"bowen_extent", {Kind::reals, Rule::positive}},
          {"times", {Kind::reals, Rule::positive}}}},
        {"holonomy",
         {{"betas", {Kind::reals, Rule::positive}},
          {"budget", {Kind::integer, Rule::positive}},
          {"transversal_pairs", {Kind::integer, Rule::positive}},
          {"max_height", {Kind::real, Rule::positive}},
          {"volume", {Kind::boolean}},
          {"alpha", {Kind::real, Rule::positive}},
          {"beta", {Kind::real, Rule::positive}},
          {"r", {Kind::real, Rule::positive}},
          {"n_list", {Kind::ints, Rule::positive}},
          {"point", {Kind::reals}}}},
        {"thomas",
         {{"h_f", {Kind::real, Rule::positive}},
          {"tau", {Kind::real}},
          {"tau_min", {Kind::real}},
          {"tau_max", {Kind::real}},
          {"measure", {Kind::boolean}},
          {"tolerance", {Kind::real, Rule::positive}}}},
        {"expect",
         {{"u", {Kind::reals}},
          {"tau", {Kind::real}},
          {"chi_u", {Kind::real}},
          {"bowen", {Kind::real}},
          {"ratio", {Kind::real}},
          {"tolerance", {Kind::real, Rule::positive}}}},
        {"output", {{"dir", {Kind::str}}, {"formats", {Kind::strs}}}},
    };
    return s;
}

std::string trim(const std::string& s)
{
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::string strip_comment(const std::string& s)
{
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
        if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
}

ConfigValue::Scalar parse_scalar(const std::string& raw, int line)
{
    std::string t = trim(raw);
    if (t.empty()) throw ConfigError("missing value", line);
    if (t.front() == '"') {
        if (t.size() < 2 || t.back() != '"') throw ConfigError("unterminated string", line);
        std::string out;
        for (std::size_t i = 1; i + 1 < t.size(); ++i) {
            if (t[i] == '\\' && i + 2 < t.size()) ++i;
            out += t[i];
        }
        return out;
    }
    if (t == "true") return true;
    if (t == "false") return false;
    const char* b = t.c_str();
    char* e = nullptr;
    bool integral = t.find_first_of(".eEn") == std::string::npos;
    if (integral) {
        long long v = std::strtoll(b, &e, 10);
        if (*e == '\0') return v;
    }
    double v = std::strtod(b, &e);
    if (*e != '\0' || !std::isfinite(v)) throw ConfigError("cannot parse value '" + t + "'", line);
    return v;
}

ConfigValue parse_value(const std::string& raw, int line)
{
    std::string t = trim(raw);
    ConfigValue cv;
    cv.line = line;
    if (!t.empty() && t.front() == '[') {
        if (t.back() != ']') throw ConfigError("unterminated array", line);
        std::string body = trim(t.substr(1, t.size() - 2));
        std::vector<ConfigValue::Scalar> items;
        if (!body.empty()) {
            bool quoted = false;
            std::string cur;
            for (char c : body) {
                if (c == '"') quoted = !quoted;
                if (c == ',' && !quoted) {
                    items.push_back(parse_scalar(cur, line));
                    cur.clear();
                } else {
                    cur += c;
                }
            }
            if (!trim(cur).empty()) items.push_back(parse_scalar(cur, line));
        }
        cv.value = items;
        return cv;
    }
    std::visit([&](auto&& v) { cv.value = v; }, parse_scalar(t, line));
    return cv;
}

bool is_number(const ConfigValue::Scalar& s)
{
    return std::holds_alternative<long long>(s) || std::holds_alternative<double>(s);
}

double as_real(const ConfigValue::Scalar& s)
{
    if (auto p = std::get_if<long long>(&s)) return static_cast<double>(*p);
    return std::get<double>(s);
}

void check_rule(double v, Rule r, const std::string& key, int line)
{
    if (r == Rule::positive && !(v > 0.0)) throw ConfigError("'" + key + "' must be positive", line);
    if (r == Rule::nonneg && !(v >= 0.0)) throw ConfigError("'" + key + "' must be non-negative", line);
}

void check(const ConfigValue& cv, const KeySpec& spec, const std::string& key)
{
    const int line = cv.line;
    auto scalar = [&]() -> ConfigValue::Scalar {
        ConfigValue::Scalar out;
        std::visit(
            [&](auto&& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, std::vector<ConfigValue::Scalar>>)
                    throw ConfigError("'" + key + "' expects a scalar, not an array", line);
                else
                    out = v;
            },
            cv.value);
        return out;
    };
    auto array = [&]() -> const std::vector<ConfigValue::Scalar>& {
        auto p = std::get_if<std::vector<ConfigValue::Scalar>>(&cv.value);
        if (!p) throw ConfigError("'" + key + "' expects an array", line);
        return *p;
    };
    switch (spec.kind) {
    case Kind::str:
        if (!std::holds_alternative<std::string>(scalar())) throw ConfigError("'" + key + "' expects a string", line);
        break;
    case Kind::boolean:
        if (!std::holds_alternative<bool>(scalar())) throw ConfigError("'" + key + "' expects true or false", line);
        break;
    case Kind::integer: {
        auto s = scalar();
        if (!std::holds_alternative<long long>(s)) throw ConfigError("'" + key + "' expects an integer", line);
        check_rule(as_real(s), spec.rule, key, line);
        break;
    }
    case Kind::real: {
        auto s = scalar();
        if (!is_number(s)) throw ConfigError("'" + key + "' expects a number", line);
        check_rule(as_real(s), spec.rule, key, line);
        break;
    }
    case Kind::reals:
        for (const auto& s : array()) {
            if (!is_number(s)) throw ConfigError("'" + key + "' expects an array of numbers", line);
            check_rule(as_real(s), spec.rule, key, line);
        }
        break;
    case Kind::ints:
        for (const auto& s : array()) {
            if (!std::holds_alternative<long long>(s)) throw ConfigError("'" + key + "' expects an array of integers", line);
            check_rule(as_real(s), spec.rule, key, line);
        }
        break;
    case Kind::strs:
        for (const auto& s : array())
            if (!std::holds_alternative<std::string>(s)) throw ConfigError("'" + key + "' expects an array of strings", line);
        break;
    }
}

const KeySpec& lookup(const std::string& section, const std::string& key, int line)
{
    auto sec = schema().find(section);
    if (sec == schema().end()) throw ConfigError("unknown section [" + section + "]", line);
    auto k = sec->second.find(key);
    if (k == sec->second.end()) {
        std::string where = section.empty() ? "at top level" : "in [" + section + "]";
        throw ConfigError("unknown key '" + key + "' " + where, line);
    }
    return k->second;
}

} // namespace

Config Config::parse(const std::string& text)
{
    Config c;
    std::istringstream in(text);
    std::string raw, section;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string t = trim(strip_comment(raw));
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ConfigError("malformed section header", line);
            section = trim(t.substr(1, t.size() - 2));
            if (!schema().count(section) || section.empty()) throw ConfigError("unknown section [" + section + "]", line);
            continue;
        }
        std::size_t eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
        std::string key = trim(t.substr(0, eq));
        if (key.empty()) throw ConfigError("empty key", line);
        for (char ch : key)
            if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_')
                throw ConfigError("invalid key '" + key + "'", line);
        const KeySpec& spec = lookup(section, key, line);
        if (c.data_[section].count(key)) throw ConfigError("duplicate key '" + key + "'", line);
        ConfigValue v = parse_value(t.substr(eq + 1), line);
        check(v, spec, key);
        c.data_[section][key] = v;
    }
    return c;
}

Config Config::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

void Config::set(const std::string& section, const std::string& key, const std::string& literal)
{
    const KeySpec& spec = lookup(section, key, 0);
    std::string lit = literal;
    if (spec.kind == Kind::str && (lit.empty() || lit.front() != '"')) lit = "\"" + lit + "\"";
    ConfigValue v = parse_value(lit, 0);
    check(v, spec, key);
    data_[section][key] = v;
}

const ConfigValue* Config::find(const std::string& section, const std::string& key) const
{
    auto s = data_.find(section);
    if (s == data_.end()) return nullptr;
    auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
}

bool Config::has(const std::string& section, const std::string& key) const { return find(section, key) != nullptr; }

int Config::line(const std::string& section, const std::string& key) const
{
    auto v = find(section, key);
    return v ? v->line : 0;
}

std::string Config::get_string(const std::string& section, const std::string& key, const std::string& fallback) const
{
    auto v = find(section, key);
    return v ? std::get<std::string>(v->value) : fallback;
}

double Config::get_real(const std::string& section, const std::string& key, double fallback) const
{
    auto v = find(section, key);
    if (!v) return fallback;
    if (auto p = std::get_if<long long>(&v->value)) return static_cast<double>(*p);
    return std::get<double>(v->value);
}

long long Config::get_int(const std::string& section, const std::string& key, long long fallback) const
{
    auto v = find(section, key);
    return v ? std::get<long long>(v->value) : fallback;
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const
{
    auto v = find(section, key);
    return v ? std::get<bool>(v->value) : fallback;
}

std::vector<double> Config::get_reals(const std::string& section, const std::string& key,
                                      const std::vector<double>& fallback) const
{
    auto v = find(section, key);
    if (!v) return fallback;
    std::vector<double> out;
    for (const auto& s : std::get<std::vector<ConfigValue::Scalar>>(v->value)) out.push_back(as_real(s));
    return out;
}

std::vector<long long> Config::get_ints(const std::string& section, const std::string& key,
                                        const std::vector<long long>& fallback) const
{
    auto v = find(section, key);
    if (!v) return fallback;
    std::vector<long long> out;
    for (const auto& s : std::get<std::vector<ConfigValue::Scalar>>(v->value)) out.push_back(std::get<long long>(s));
    return out;
}

std::vector<std::string> Config::get_strings(const std::string& section, const std::string& key,
                                             const std::vector<std::string>& fallback) const
{
    auto v = find(section, key);
    if (!v) return fallback;
    std::vector<std::string> out;
    for (const auto& s : std::get<std::vector<ConfigValue::Scalar>>(v->value)) out.push_back(std::get<std::string>(s));
    return out;
}

std::vector<std::string> config_keys()
{
    std::vector<std::string> out;
    for (const auto& [sec, keys] : schema())
        for (const auto& [k, spec] : keys) out.push_back(sec.empty() ? k : sec + "." + k);
    return out;
}

} // namespace qc
