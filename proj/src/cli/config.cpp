#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>

#include "viscoflow/cli.hpp"
#include "viscoflow/errors.hpp"

namespace viscoflow::cli {

namespace {

enum class Kind { Int, Num, Bool, Text, NumList, IntList, WordList, Choice };

struct KeySpec {
    const char* section;
    const char* key;
    Kind kind;
    const char* def;
    std::vector<std::string> choices = {};
};

const std::vector<KeySpec>& schema() {
    static const std::vector<KeySpec> s = {
        {"grid", "dim", Kind::Int, "2"},
        {"grid", "n", Kind::Int, "64"},
        {"grid", "L", Kind::Num, "1"},

        {"physics", "mu", Kind::Num, "1"},
        {"physics", "nu", Kind::Num, "1.5"},
        {"physics", "alpha", Kind::Num, "1"},
        {"physics", "pressure", Kind::Choice, "quadratic", {"quadratic", "power"}},
        {"physics", "gamma_gas", Kind::Num, "2"},

        {"run", "dt", Kind::Num, "0.05"},
        {"run", "T", Kind::Num, "20"},
        {"run", "amplitude", Kind::Num, "0.01"},
        {"run", "seed", Kind::Int, "1"},
        {"run", "cadence", Kind::Int, "1"},
        {"run", "cfl", Kind::Num, "0.5"},
        {"run", "data_modes", Kind::Int, "3"},
        {"run", "data_kmax", Kind::Int, "2"},
        {"run", "picard_iterations", Kind::Int, "8"},
        {"run", "picard_init", Kind::Choice, "mollified", {"mollified", "fixed"}},
        {"run", "divergence_factor", Kind::Num, "10"},
        {"run", "sup_factor", Kind::Num, "10"},
        {"run", "check_constraints", Kind::Bool, "true"},
        {"run", "snapshots", Kind::Bool, "true"},

        {"linear", "xi", Kind::NumList, "1,2,4,8"},
        {"linear", "pairs", Kind::WordList, "rho-d,omega-W,ecal-d"},
        {"linear", "tolerance", Kind::Num, "0.02"},

        {"analyze", "input", Kind::Text, ""},
        {"analyze", "besov", Kind::NumList, "-1,0,1,2"},
        {"analyze", "hybrid_s", Kind::NumList, "0,2"},
        {"analyze", "hybrid_t", Kind::NumList, "1,1"},

        {"constraints", "n", Kind::Int, "64"},
        {"constraints", "L", Kind::Num, "8"},
        {"constraints", "seed_eps", Kind::Num, "0.3"},
        {"constraints", "r0", Kind::Num, "1e-4"},
        {"constraints", "u_amp", Kind::Num, "0.4"},
        {"constraints", "admissible_n", Kind::Int, "128"},
        {"constraints", "admissible_eps", Kind::Num, "0.05"},
        {"constraints", "admissible_u", Kind::Num, "0.2"},
        {"constraints", "dt", Kind::Num, "0.05"},
        {"constraints", "steps", Kind::Int, "200"},
        {"constraints", "every", Kind::Int, "4"},
        {"constraints", "refine_L", Kind::Num, "1"},
        {"constraints", "refine_eps", Kind::Num, "0.05"},
        {"constraints", "refine_n", Kind::IntList, "8,16,32"},
        {"constraints", "refine_seed", Kind::Int, "3"},
        {"constraints", "min_ratio", Kind::Num, "4"},

        {"scaling", "s", Kind::NumList, "-1,0,1"},
        {"scaling", "seed", Kind::Int, "13"},
        {"scaling", "rank", Kind::Choice, "scalar", {"scalar", "vector", "matrix"}},
        {"scaling", "tolerance", Kind::Num, "1e-10"},
    };
    return s;
}

const KeySpec* find_spec(const std::string& section, const std::string& key) {
    for (const auto& k : schema())
        if (section == k.section && key == k.key) return &k;
    return nullptr;
}

bool known_section(const std::string& section) {
    return std::any_of(schema().begin(), schema().end(), [&](const KeySpec& k) { return section == k.section; });
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = s.find(',', start);
        out.push_back(trim(s.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

template <class T>
bool parse_exact(const std::string& s, T& v) {
    const char* b = s.data();
    const char* e = b + s.size();
    auto [p, ec] = std::from_chars(b, e, v);
    return ec == std::errc() && p == e;
}

bool parse_bool(const std::string& s, bool& v) {
    if (s == "true" || s == "1" || s == "yes" || s == "on") return v = true, true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return v = false, true;
    return false;
}

[[noreturn]] void bad(const KeySpec& k, const std::string& value, const char* expect) {
    throw ConfigurationError(std::string(k.section) + "." + k.key + ": expected " + expect + ", got '" + value + "'");
}

// Checks the value and returns its canonical text.
std::string canonical(const KeySpec& k, const std::string& raw) {
    const std::string v = trim(raw);
    switch (k.kind) {
        case Kind::Int: {
            long long x;
            if (!parse_exact(v, x)) bad(k, v, "an integer");
            return v;
        }
        case Kind::Num: {
            double x;
            if (!parse_exact(v, x) || !std::isfinite(x)) bad(k, v, "a finite number");
            return v;
        }
        case Kind::Bool: {
            bool b;
            if (!parse_bool(v, b)) bad(k, v, "true or false");
            return b ? "true" : "false";
        }
        case Kind::Text: return v;
        case Kind::Choice:
            if (std::find(k.choices.begin(), k.choices.end(), v) == k.choices.end()) {
                std::string list;
                for (const auto& c : k.choices) list += (list.empty() ? "" : "|") + c;
                bad(k, v, list.c_str());
            }
            return v;
        case Kind::NumList:
        case Kind::IntList:
        case Kind::WordList: {
            if (v.empty()) bad(k, v, "a non-empty list");
            std::string out;
            for (const auto& item : split(v)) {
                if (k.kind == Kind::NumList) {
                    double x;
                    if (!parse_exact(item, x) || !std::isfinite(x)) bad(k, v, "a list of numbers");
                } else if (k.kind == Kind::IntList) {
                    long long x;
                    if (!parse_exact(item, x)) bad(k, v, "a list of integers");
                } else if (item.empty()) {
                    bad(k, v, "a list of names");
                }
                out += (out.empty() ? "" : ",") + item;
            }
            return out;
        }
    }
    return v;
}

const KeySpec& require_spec(const std::string& section, const std::string& key) {
    const KeySpec* k = find_spec(section, key);
    if (!k) {
        if (!known_section(section)) throw ConfigurationError("unknown config section [" + section + "]");
        throw ConfigurationError("unknown config key " + section + "." + key);
    }
    return *k;
}

}  // namespace

Config Config::defaults() {
    Config c;
    for (const auto& k : schema()) c.values_[k.section][k.key] = k.def;
    return c;
}

Config Config::load(const std::string& path) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(path, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigurationError("config: " + std::string(e.what()));
    }
    Config c = defaults();
    c.source_ = path;
    const auto parent = std::filesystem::path(path).parent_path();
    c.base_dir_ = parent.empty() ? "." : parent.string();
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw ConfigurationError("config key '" + section + "' outside a section");
        if (!known_section(section)) throw ConfigurationError("unknown config section [" + section + "]");
        for (const auto& [key, node] : body) {
            const KeySpec& k = require_spec(section, key);
            c.values_[section][key] = canonical(k, node.data());
        }
    }
    return c;
}

void Config::set(const std::string& dotted, const std::string& value) {
    const auto dot = dotted.find('.');
    if (dot == std::string::npos) throw ConfigurationError("expected section.key, got '" + dotted + "'");
    const std::string section = dotted.substr(0, dot), key = dotted.substr(dot + 1);
    const KeySpec& k = require_spec(section, key);
    values_[section][key] = canonical(k, value);
}

namespace {

const std::string& lookup(const std::map<std::string, std::map<std::string, std::string>>& v,
                          const std::string& section, const std::string& key) {
    require_spec(section, key);
    return v.at(section).at(key);
}

}  // namespace

int Config::integer(const std::string& section, const std::string& key) const {
    int x = 0;
    const auto& s = lookup(values_, section, key);
    if (!parse_exact(s, x)) throw ConfigurationError(section + "." + key + ": integer out of range");
    return x;
}

double Config::number(const std::string& section, const std::string& key) const {
    double x = 0;
    parse_exact(lookup(values_, section, key), x);
    return x;
}

bool Config::flag(const std::string& section, const std::string& key) const {
    bool b = false;
    parse_bool(lookup(values_, section, key), b);
    return b;
}

std::string Config::text(const std::string& section, const std::string& key) const {
    return lookup(values_, section, key);
}

std::vector<double> Config::numbers(const std::string& section, const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split(lookup(values_, section, key))) {
        double x = 0;
        parse_exact(item, x);
        out.push_back(x);
    }
    return out;
}

std::vector<int> Config::integers(const std::string& section, const std::string& key) const {
    std::vector<int> out;
    for (const auto& item : split(lookup(values_, section, key))) {
        int x = 0;
        if (!parse_exact(item, x)) throw ConfigurationError(section + "." + key + ": integer out of range");
        out.push_back(x);
    }
    return out;
}

std::vector<std::string> Config::words(const std::string& section, const std::string& key) const {
    return split(lookup(values_, section, key));
}

std::string Config::path(const std::string& section, const std::string& key) const {
    const std::string v = text(section, key);
    if (v.empty()) return v;
    const std::filesystem::path p(v);
    return p.is_absolute() ? v : (std::filesystem::path(base_dir_) / p).string();
}

Mode parse_mode(const std::string& name) {
    for (Mode m : {Mode::Analyze, Mode::Linear, Mode::Simulate, Mode::Iterate, Mode::Constraints, Mode::Scaling})
        if (name == mode_name(m)) return m;
    throw ConfigurationError("unknown mode '" + name + "'");
}

const char* mode_name(Mode m) {
    switch (m) {
        case Mode::Analyze: return "analyze";
        case Mode::Linear: return "linear";
        case Mode::Simulate: return "simulate";
        case Mode::Iterate: return "iterate";
        case Mode::Constraints: return "constraints";
        default: return "scaling";
    }
}

}  // namespace viscoflow::cli
