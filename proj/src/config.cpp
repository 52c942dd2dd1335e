#include "askbench/config.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace askbench::config {

namespace toml {

namespace {

bool is_bare_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

struct Cursor {
    std::string_view text;
    size_t pos = 0;
    int line = 1;
    const std::string& origin;

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError(ConfigErrorKind::ParseError,
                          fmt::format("{}:{}: {}", origin, line, what));
    }
    bool eof() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }
    void skip_inline_ws() {
        while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos;
    }
    void skip_comment() {
        if (!eof() && peek() == '#') {
            while (!eof() && peek() != '\n') ++pos;
        }
    }
    // Consumes end-of-line (with optional comment); fails on trailing junk.
    void expect_eol(const std::string& context) {
        skip_inline_ws();
        skip_comment();
        if (eof()) return;
        if (peek() == '\r') ++pos;
        if (eof()) return;
        if (peek() != '\n') fail(fmt::format("unexpected text after {}", context));
        ++pos;
        ++line;
    }
};

std::string parse_key(Cursor& c) {
    std::string key;
    while (true) {
        size_t start = c.pos;
        while (!c.eof() && is_bare_key_char(c.peek())) ++c.pos;
        if (c.pos == start) c.fail("expected a bare key");
        key.append(c.text.substr(start, c.pos - start));
        c.skip_inline_ws();
        if (!c.eof() && c.peek() == '.') {
            ++c.pos;
            c.skip_inline_ws();
            key.push_back('.');
            continue;
        }
        return key;
    }
}

std::string parse_basic_string(Cursor& c) {
    ++c.pos;  // opening quote
    std::string out;
    while (true) {
        if (c.eof() || c.peek() == '\n') c.fail("unterminated string");
        char ch = c.peek();
        ++c.pos;
        if (ch == '"') return out;
        if (ch != '\\') {
            out.push_back(ch);
            continue;
        }
        if (c.eof()) c.fail("unterminated escape");
        char esc = c.peek();
        ++c.pos;
        switch (esc) {
            case '"': out.push_back('"'); break;
            case '\\': out.push_back('\\'); break;
            case 'n': out.push_back('\n'); break;
            case 't': out.push_back('\t'); break;
            case 'r': out.push_back('\r'); break;
            default: c.fail(fmt::format("unsupported escape '\\{}'", esc));
        }
    }
}

bool scan_number(std::string_view token, Value& out) {
    if (token.empty()) return false;
    size_t i = token[0] == '+' || token[0] == '-' ? 1 : 0;
    if (i >= token.size()) return false;
    bool digits = false, dot = false, exp = false;
    for (size_t k = i; k < token.size(); ++k) {
        char ch = token[k];
        if (std::isdigit(static_cast<unsigned char>(ch))) {
            digits = true;
        } else if (ch == '.' && !dot && !exp) {
            dot = true;
        } else if ((ch == 'e' || ch == 'E') && digits && !exp) {
            exp = true;
            if (k + 1 < token.size() && (token[k + 1] == '+' || token[k + 1] == '-')) ++k;
        } else {
            return false;
        }
    }
    if (!digits) return false;
    if (!dot && !exp) {
        std::int64_t value = 0;
        auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
        if (ec != std::errc() || ptr != token.data() + token.size()) return false;
        out.type = Value::Type::integer;
        out.i = value;
        return true;
    }
    try {
        size_t used = 0;
        double value = std::stod(std::string(token), &used);
        if (used != token.size()) return false;
        out.type = Value::Type::floating;
        out.d = value;
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

Value parse_value(Cursor& c) {
    Value v;
    v.line = c.line;
    if (c.eof()) c.fail("expected a value");
    char ch = c.peek();
    if (ch == '"') {
        v.type = Value::Type::string;
        v.s = parse_basic_string(c);
        return v;
    }
    size_t start = c.pos;
    while (!c.eof() && c.peek() != '\n' && c.peek() != '#' && c.peek() != '\r') ++c.pos;
    std::string_view token = c.text.substr(start, c.pos - start);
    while (!token.empty() && (token.back() == ' ' || token.back() == '\t')) token.remove_suffix(1);
    if (token == "true" || token == "false") {
        v.type = Value::Type::boolean;
        v.b = token == "true";
        return v;
    }
    if (scan_number(token, v)) return v;
    if (token.empty()) c.fail("expected a value");
    c.fail(fmt::format("cannot parse value '{}' (arrays, dates and inline tables are unsupported)",
                       std::string(token)));
}

}  // namespace

std::map<std::string, Value> parse(std::string_view text, const std::string& origin) {
    std::map<std::string, Value> out;
    Cursor c{text, 0, 1, origin};
    std::string prefix;
    while (!c.eof()) {
        c.skip_inline_ws();
        c.skip_comment();
        if (c.eof()) break;
        char ch = c.peek();
        if (ch == '\n') {
            ++c.pos;
            ++c.line;
            continue;
        }
        if (ch == '\r') {
            ++c.pos;
            continue;
        }
        if (ch == '[') {
            ++c.pos;
            c.skip_inline_ws();
            if (!c.eof() && c.peek() == '[') c.fail("arrays of tables are unsupported");
            prefix = parse_key(c);
            c.skip_inline_ws();
            if (c.eof() || c.peek() != ']') c.fail("unterminated table header");
            ++c.pos;
            c.expect_eol("table header");
            continue;
        }
        std::string key = parse_key(c);
        c.skip_inline_ws();
        if (c.eof() || c.peek() != '=') c.fail(fmt::format("expected '=' after key '{}'", key));
        ++c.pos;
        c.skip_inline_ws();
        Value value = parse_value(c);
        c.expect_eol("value");
        std::string full = prefix.empty() ? key : prefix + "." + key;
        if (!out.emplace(full, std::move(value)).second) {
            throw ConfigError(ConfigErrorKind::ParseError,
                              fmt::format("{}: duplicate key '{}'", origin, full));
        }
    }
    return out;
}

Value parse_literal(std::string_view text) {
    Value v;
    if (text == "true" || text == "false") {
        v.type = Value::Type::boolean;
        v.b = text == "true";
        return v;
    }
    if (scan_number(text, v)) return v;
    v.type = Value::Type::string;
    v.s = std::string(text);
    return v;
}

}  // namespace toml

namespace {

using toml::Value;

[[noreturn]] void type_error(const std::string& key, const char* want) {
    throw ConfigError(ConfigErrorKind::TypeMismatch,
                      fmt::format("key '{}' must be a {}", key, want));
}

std::string as_string(const std::string& key, const Value& v) {
    if (v.type != Value::Type::string) type_error(key, "string");
    return v.s;
}

std::int64_t as_int(const std::string& key, const Value& v) {
    if (v.type != Value::Type::integer) type_error(key, "integer");
    return v.i;
}

double as_double(const std::string& key, const Value& v) {
    if (v.type == Value::Type::floating) return v.d;
    if (v.type == Value::Type::integer) return static_cast<double>(v.i);
    type_error(key, "number");
}

bool starts_with(std::string_view text, std::string_view prefix) {
    return text.size() >= prefix.size() && text.substr(0, prefix.size()) == prefix;
}

void apply_backend_key(gateway::BackendConfig& backend, const std::string& full_key,
                       const std::string& field, const Value& v,
                       const std::filesystem::path& base_dir) {
    if (field == "kind") {
        std::string kind = as_string(full_key, v);
        if (kind == "mock") {
            backend.kind = gateway::BackendKind::mock;
        } else if (kind == "http") {
            backend.kind = gateway::BackendKind::http;
        } else {
            throw ConfigError(ConfigErrorKind::TypeMismatch,
                              fmt::format("key '{}': unknown backend kind '{}'", full_key, kind));
        }
    } else if (field == "base_url") {
        backend.base_url = as_string(full_key, v);
    } else if (field == "model") {
        backend.model_name = as_string(full_key, v);
    } else if (field == "api_key_env") {
        backend.api_key_env = as_string(full_key, v);
    } else if (field == "max_retries") {
        backend.max_retries = static_cast<int>(as_int(full_key, v));
    } else if (field == "max_concurrency") {
        backend.max_concurrency = static_cast<int>(as_int(full_key, v));
    } else if (field == "requests_per_minute") {
        backend.requests_per_minute = static_cast<int>(as_int(full_key, v));
    } else if (field == "script") {
        std::filesystem::path p = as_string(full_key, v);
        if (!base_dir.empty() && p.is_relative()) p = base_dir / p;
        backend.mock_script_path = p.string();
    } else {
        throw ConfigError(ConfigErrorKind::UnknownKey, fmt::format("unknown key '{}'", full_key));
    }
}

}  // namespace

const gateway::BackendConfig& RunConfig::backend_for(std::string_view role) const {
    auto role_it = roles.find(std::string(role));
    std::string name = role_it != roles.end() ? role_it->second : std::string(role);
    auto it = backends.find(name);
    if (it == backends.end()) {
        throw ConfigError(ConfigErrorKind::BadReference,
                          fmt::format("role '{}' needs backend '{}' but the config does not define it",
                                      role, name));
    }
    return it->second;
}

RunConfig config_from_text(std::string_view text, const std::vector<std::string>& overrides,
                           const std::string& origin, const std::filesystem::path& base_dir) {
    auto table = toml::parse(text, origin);
    for (const std::string& raw : overrides) {
        size_t eq = raw.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ConfigError(ConfigErrorKind::ParseError,
                              fmt::format("override '{}' is not key=value", raw));
        }
        std::string key = raw.substr(0, eq);
        table[key] = toml::parse_literal(raw.substr(eq + 1));  // overrides replace file values
    }

    RunConfig cfg;
    static const std::vector<std::string> kRoles = {"solver", "agent", "forge", "judge"};
    for (const auto& [key, value] : table) {
        if (starts_with(key, "backends.")) {
            std::string rest = key.substr(9);
            size_t dot = rest.find('.');
            if (dot == std::string::npos || dot == 0 || dot + 1 >= rest.size()) {
                throw ConfigError(ConfigErrorKind::UnknownKey,
                                  fmt::format("unknown key '{}' (backend keys look like "
                                              "backends.<name>.<field>)",
                                              key));
            }
            std::string name = rest.substr(0, dot);
            std::string field = rest.substr(dot + 1);
            apply_backend_key(cfg.backends[name], key, field, value, base_dir);
        } else if (starts_with(key, "roles.")) {
            std::string role = key.substr(6);
            if (std::find(kRoles.begin(), kRoles.end(), role) == kRoles.end()) {
                throw ConfigError(ConfigErrorKind::UnknownKey, fmt::format("unknown key '{}'", key));
            }
            cfg.roles[role] = as_string(key, value);
        } else if (key == "forge.seed") {
            cfg.seed = static_cast<std::uint64_t>(as_int(key, value));
        } else if (key == "filter.n_samples") {
            cfg.filter.n_samples = static_cast<int>(as_int(key, value));
        } else if (key == "filter.direct_threshold") {
            cfg.filter.direct_threshold = static_cast<int>(as_int(key, value));
        } else if (key == "filter.easy_threshold") {
            cfg.filter.easy_threshold = static_cast<int>(as_int(key, value));
        } else if (key == "rewards.correct") {
            cfg.rewards.correct_reward = as_double(key, value);
        } else if (key == "rewards.incorrect") {
            cfg.rewards.incorrect_reward = as_double(key, value);
        } else if (key == "rewards.unnecessary_request_penalty") {
            cfg.rewards.unnecessary_request_penalty = as_double(key, value);
        } else if (key == "rewards.request_bonus") {
            cfg.rewards.request_bonus = as_double(key, value);
        } else if (key == "grpo.beta") {
            cfg.grpo.beta = as_double(key, value);
            if (cfg.grpo.beta < 0) {
                throw ConfigError(ConfigErrorKind::TypeMismatch, "grpo.beta must be >= 0");
            }
        } else if (key == "grpo.kl_estimator") {
            if (as_string(key, value) != "k3") {
                throw ConfigError(ConfigErrorKind::TypeMismatch,
                                  "grpo.kl_estimator: only 'k3' is implemented");
            }
        } else if (key == "advantages.epsilon") {
            cfg.advantage_epsilon = as_double(key, value);
        } else if (key == "sft.rollouts") {
            cfg.sft_rollouts = static_cast<int>(as_int(key, value));
        } else if (key == "paths.input_dir") {
            cfg.input_dir = as_string(key, value);
        } else if (key == "paths.output_dir") {
            cfg.output_dir = as_string(key, value);
        } else if (key == "run.max_turns") {
            cfg.max_turns = static_cast<int>(as_int(key, value));
        } else if (key == "run.rollouts_per_question") {
            cfg.rollouts_per_question = static_cast<int>(as_int(key, value));
        } else if (key == "run.sweep_caps") {
            cfg.sweep_caps.clear();
            std::string caps = as_string(key, value);
            size_t pos = 0;
            while (pos <= caps.size()) {
                size_t comma = caps.find(',', pos);
                std::string item = caps.substr(pos, comma == std::string::npos ? std::string::npos
                                                                               : comma - pos);
                if (!item.empty()) {
                    int cap = 0;
                    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), cap);
                    if (ec != std::errc() || ptr != item.data() + item.size() || cap < 1) {
                        throw ConfigError(ConfigErrorKind::TypeMismatch,
                                          "run.sweep_caps must be comma-separated positive integers");
                    }
                    cfg.sweep_caps.push_back(cap);
                }
                if (comma == std::string::npos) break;
                pos = comma + 1;
            }
            if (cfg.sweep_caps.empty()) {
                throw ConfigError(ConfigErrorKind::TypeMismatch, "run.sweep_caps names no caps");
            }
        } else if (key == "run.temperature") {
            cfg.temperature = as_double(key, value);
        } else if (key == "run.max_tokens") {
            cfg.max_tokens = static_cast<int>(as_int(key, value));
        } else if (key == "run.log_level") {
            cfg.log_level = as_string(key, value);
        } else {
            throw ConfigError(ConfigErrorKind::UnknownKey, fmt::format("unknown key '{}'", key));
        }
    }

    if (cfg.filter.n_samples < 1 || cfg.filter.direct_threshold >= cfg.filter.n_samples ||
        cfg.filter.easy_threshold >= cfg.filter.n_samples) {
        throw ConfigError(ConfigErrorKind::TypeMismatch,
                          "filter thresholds must be smaller than filter.n_samples (and n_samples >= 1)");
    }
    if (cfg.max_turns < 1) {
        throw ConfigError(ConfigErrorKind::TypeMismatch, "run.max_turns must be at least 1");
    }
    if (cfg.sft_rollouts < 1) {
        throw ConfigError(ConfigErrorKind::TypeMismatch, "sft.rollouts must be at least 1");
    }
    if (cfg.rollouts_per_question < 1) {
        throw ConfigError(ConfigErrorKind::TypeMismatch, "run.rollouts_per_question must be at least 1");
    }
    if (cfg.input_dir == cfg.output_dir) {
        throw ConfigError(ConfigErrorKind::TypeMismatch,
                          "paths.input_dir and paths.output_dir must differ");
    }
    for (const auto& [role, name] : cfg.roles) {
        if (cfg.backends.find(name) == cfg.backends.end()) {
            throw ConfigError(ConfigErrorKind::BadReference,
                              fmt::format("roles.{} = \"{}\" does not name a configured backend",
                                          role, name));
        }
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(ConfigErrorKind::Io, fmt::format("cannot open config '{}'", path.string()));
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return config_from_text(buf.str(), overrides, path.string(),
                            path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

}  // namespace askbench::config
