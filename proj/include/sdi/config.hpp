#pragma once

#include <string>
#include <utility>
#include <vector>

namespace sdi {

// Value grammar of scenario files: numbers, booleans, bare identifiers,
// bracketed lists and constructor calls with positional or named arguments,
// e.g. `ball(center=[0,0], radius=1)` or `hull(points=[[0,0],[1,0]])`.
struct ConfigValue {
    enum class Kind { number, boolean, string, list, call };

    Kind kind = Kind::number;
    double number = 0.0;
    bool boolean = false;
    std::string text;  // string payload, or the call head
    std::vector<ConfigValue> items;
    std::vector<std::pair<std::string, ConfigValue>> kwargs;
    int line = 0;

    bool operator==(const ConfigValue& other) const;  // structural, ignores line
    [[nodiscard]] std::string print() const;
};

// Parsed scenario file: ordered sections of ordered key/value pairs. Parsing
// is strict: unknown sections or keys are errors, never silent defaults.
struct ScenarioConfig {
    std::vector<std::pair<std::string, std::vector<std::pair<std::string, ConfigValue>>>> sections;

    [[nodiscard]] const ConfigValue* find(const std::string& section,
                                          const std::string& key) const;
    [[nodiscard]] std::string print() const;
    bool operator==(const ScenarioConfig& other) const;
};

ScenarioConfig parse_config_text(const std::string& text);
ScenarioConfig parse_config_file(const std::string& path);

// FNV-1a hash of the canonical printed form; stamped into artifacts.
std::uint64_t config_hash(const ScenarioConfig& cfg);

}  // namespace sdi
