#pragma once

#include "askbench/filtering.hpp"
#include "askbench/gateway.hpp"
#include "askbench/rewards.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace askbench::config {

enum class ConfigErrorKind { ParseError, UnknownKey, TypeMismatch, BadReference, Io };

class ConfigError : public std::runtime_error {
public:
    ConfigError(ConfigErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}
    ConfigErrorKind kind() const { return kind_; }

private:
    ConfigErrorKind kind_;
};

// Minimal TOML subset: [table] headers, dotted bare keys, basic "..."
// strings with \\ \" \n \t \r escapes, integers, floats, booleans, and #
// comments. No arrays, dates, inline tables, or multiline strings.
namespace toml {

struct Value {
    enum class Type { string, integer, floating, boolean };
    Type type = Type::string;
    std::string s;
    std::int64_t i = 0;
    double d = 0.0;
    bool b = false;
    int line = 0;
};

// Keys come back flattened ("filter.n_samples"). Duplicate keys are a
// ParseError, matching TOML semantics.
std::map<std::string, Value> parse(std::string_view text, const std::string& origin);

// Parses an override value the way the file parser would: bool and number
// literals keep their type, everything else is a string.
Value parse_literal(std::string_view text);

}  // namespace toml

struct RunConfig {
    std::map<std::string, gateway::BackendConfig> backends;
    std::map<std::string, std::string> roles;  // solver/agent/forge/judge -> backend name
    std::uint64_t seed = 42;
    filtering::FilterConfig filter;
    rewards::RewardConfig rewards;
    rewards::GrpoConfig grpo;
    double advantage_epsilon = 1e-6;
    int sft_rollouts = 8;
    int rollouts_per_question = 1;  // >1 suffixes trajectory ids "#k" for grouped advantages
    std::vector<int> sweep_caps = {2, 4};
    std::string input_dir = ".";
    std::string output_dir = "out";
    int max_turns = 2;
    double temperature = 0.0;
    int max_tokens = 2048;
    std::string log_level = "info";

    // Resolves a role (solver, agent, forge, judge) through the role map to
    // a configured backend. Throws BadReference when the chain breaks.
    const gateway::BackendConfig& backend_for(std::string_view role) const;
};

// File + overrides. Overrides are "dotted.key=value" strings and win over
// file values; unknown keys anywhere are an error.
RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

// Same, from text (origin names the source in errors). base_dir anchors
// relative mock-script paths; empty keeps them as written.
RunConfig config_from_text(std::string_view text, const std::vector<std::string>& overrides,
                           const std::string& origin, const std::filesystem::path& base_dir = {});

}  // namespace askbench::config
