#include "pnpflow/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace pnpflow {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
    std::ostringstream os;
    os << origin << ":" << line << ": " << msg;
    throw ConfigError(os.str());
}

bool valid_key(const std::string& k) {
    if (k.empty()) return false;
    for (char c : k)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-'))
            return false;
    return true;
}

}  // namespace

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path);
}

Config Config::parse_string(const std::string& text, const std::string& origin) {
    Config cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') fail(origin, lineno, "unterminated section header");
            section = trim(t.substr(1, t.size() - 2));
            if (!valid_key(section)) fail(origin, lineno, "invalid section name '" + section + "'");
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) fail(origin, lineno, "expected 'key = value'");
        std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (!valid_key(key)) fail(origin, lineno, "invalid key '" + key + "'");
        if (!section.empty()) key = section + "." + key;
        if (cfg.has(key)) fail(origin, lineno, "duplicate key '" + key + "'");
        cfg.entries_.emplace_back(key, value);
    }
    return cfg;
}

int Config::find(const std::string& key) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].first == key) return static_cast<int>(i);
    return -1;
}

bool Config::has(const std::string& key) const { return find(key) >= 0; }

const std::string& Config::get_string(const std::string& key) const {
    const int i = find(key);
    if (i < 0) throw ConfigError("missing config key '" + key + "'");
    return entries_[i].second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    const int i = find(key);
    return i < 0 ? fallback : entries_[i].second;
}

double Config::get_double(const std::string& key) const {
    const std::string& s = get_string(key);
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': not a number: '" + s + "'");
    }
}

double Config::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

int Config::get_int(const std::string& key) const {
    const std::string& s = get_string(key);
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ConfigError("config key '" + key + "': not an integer: '" + s + "'");
    return v;
}

int Config::get_int(const std::string& key, int fallback) const {
    return has(key) ? get_int(key) : fallback;
}

bool Config::get_bool(const std::string& key) const {
    const std::string& s = get_string(key);
    if (s == "true" || s == "on" || s == "yes" || s == "1") return true;
    if (s == "false" || s == "off" || s == "no" || s == "0") return false;
    throw ConfigError("config key '" + key + "': not a boolean: '" + s + "'");
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    return has(key) ? get_bool(key) : fallback;
}

void Config::set(const std::string& key, const std::string& value) {
    if (!valid_key(key)) throw ConfigError("invalid key '" + key + "'");
    const int i = find(key);
    if (i >= 0)
        entries_[i].second = value;
    else
        entries_.emplace_back(key, value);
}

std::vector<std::string> Config::keys(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_)
        if (prefix.empty() || k.rfind(prefix, 0) == 0) out.push_back(k);
    return out;
}

std::string Config::serialize() const {
    // Grouped canonical form: bare keys first, then sections in first
    // appearance order; a bare key can never land under a section header.
    std::vector<std::string> sections;
    for (const auto& [key, value] : entries_) {
        const auto dot = key.rfind('.');
        const std::string sec = dot == std::string::npos ? "" : key.substr(0, dot);
        if (std::find(sections.begin(), sections.end(), sec) == sections.end())
            sections.push_back(sec);
    }
    std::stable_partition(sections.begin(), sections.end(),
                          [](const std::string& s) { return s.empty(); });

    std::ostringstream os;
    bool first = true;
    for (const std::string& sec : sections) {
        if (!first) os << "\n";
        if (!sec.empty()) os << "[" << sec << "]\n";
        for (const auto& [key, value] : entries_) {
            const auto dot = key.rfind('.');
            const std::string ksec = dot == std::string::npos ? "" : key.substr(0, dot);
            if (ksec != sec) continue;
            os << (dot == std::string::npos ? key : key.substr(dot + 1)) << " = " << value
               << "\n";
        }
        first = false;
    }
    return os.str();
}

std::uint64_t Config::hash() const {
    const std::string s = serialize();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string Config::hash_hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
    return buf;
}

}  // namespace pnpflow
