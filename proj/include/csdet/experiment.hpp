#ifndef CSDET_EXPERIMENT_HPP
#define CSDET_EXPERIMENT_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace csdet {

constexpr const char* kVersion = "0.1.0";

/// Flat `key = value` config with [section] headers and # comments. Keys are
/// stored as "section.key"; duplicate keys keep the last value.
struct ParsedConfig {
    struct Entry {
        std::string value;
        int line = 0;
    };
    std::map<std::string, Entry> kv;

    bool has(const std::string& key) const { return kv.count(key) > 0; }
    std::string get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& def) const;
    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double def) const;
    long get_long_or(const std::string& key, long def) const;
    /// Space-separated list, or a:b:step range expansion.
    std::vector<double> get_list(const std::string& key) const;
    /// Canonical serialization used for the config hash.
    std::string canonical() const;
};

struct ConfigError {
    int line = 0;
    std::string message;
};

ParsedConfig parse_config_text(const std::string& text);  // throws ConfigError

struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> threads;
};

/// Dispatch on experiment.kind, write the CSV artifacts atomically; returns a
/// process exit status (0 ok, 2 config error, 1 runtime failure). Diagnostics
/// go to *diag.
int run_experiment_text(const std::string& config_text, const CliOverrides& overrides,
                        std::string* diag);
int run_experiment_file(const std::string& path, const CliOverrides& overrides,
                        std::string* diag);

std::uint64_t fnv1a64(const std::string& s);

}  // namespace csdet

#endif
