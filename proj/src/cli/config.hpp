#pragma once

// Run configuration for the command-line tool: a fixed schema of
// section.key entries with defaults, filled from an INI-style file and
// overridden from the command line. Every value is type-checked before a
// command starts.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace twomode::cli {

/// Invalid configuration or usage (exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ValueType { Real, OptionalReal, Integer, Boolean, Text, RealList, Choice };

struct KeySpec {
    std::string section;
    std::string key;
    ValueType type;
    std::string default_value;
    std::vector<std::string> choices;
    std::string doc;

    std::string name() const { return section + "." + key; }
};

const std::vector<KeySpec>& schema();

class Config {
public:
    /// Defaults for every key in the schema.
    Config();

    /// Reads `[section]` / `key = value` lines. Unknown sections or keys
    /// throw ConfigError. With model_only, only [model] is accepted.
    void load_file(const std::string& path, bool model_only = false);
    void load_text(const std::string& text, const std::string& origin, bool model_only = false);

    /// Sets "section.key" to value (validated).
    void set(const std::string& name, const std::string& value);
    bool has_key(const std::string& name) const;
    /// True when the value came from a file or the command line.
    bool is_explicit(const std::string& name) const;

    double real(const std::string& name) const;
    std::optional<double> optional_real(const std::string& name) const;
    long long integer(const std::string& name) const;
    bool boolean(const std::string& name) const;
    std::string text(const std::string& name) const;
    std::vector<double> real_list(const std::string& name) const;

    /// "section.key = value" lines for the given sections, schema order.
    std::vector<std::string> echo(const std::vector<std::string>& sections) const;

private:
    const KeySpec& spec(const std::string& name) const;
    void validate(const KeySpec& k, const std::string& value) const;

    std::map<std::string, std::string> values_;
    std::map<std::string, bool> explicit_;
};

std::string trim(const std::string& s);

} // namespace twomode::cli
