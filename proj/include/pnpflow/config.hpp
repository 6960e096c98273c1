#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pnpflow {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Ordered key-value configuration: `[section]` headers group keys, entries
// are addressed by dotted paths ("solver.tol"). Full-line comments start
// with '#' or ';'. Serialization is canonical (first-appearance order), so
// parse(serialize()) reproduces the exact same bytes.
class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text,
                               const std::string& origin = "<string>");

    bool has(const std::string& key) const;
    const std::string& get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key) const;
    int get_int(const std::string& key, int fallback) const;
    bool get_bool(const std::string& key) const;
    bool get_bool(const std::string& key, bool fallback) const;

    void set(const std::string& key, const std::string& value);

    // Keys in canonical order, optionally restricted to a "prefix." group.
    std::vector<std::string> keys(const std::string& prefix = "") const;

    std::string serialize() const;
    std::uint64_t hash() const;        // FNV-1a over the canonical serialization
    std::string hash_hex() const;

private:
    int find(const std::string& key) const;
    std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace pnpflow
