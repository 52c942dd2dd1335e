#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace askbench::gateway {

enum class Role { system, user, assistant };

std::string_view role_name(Role role);
Role role_from_name(std::string_view name);

struct ChatMessage {
    Role role = Role::user;
    std::string content;
};

struct CompletionRequest {
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    double top_p = 1.0;
    int max_tokens = 2048;
    int n_samples = 1;
    std::string tag;  // free-form, logging only
};

struct CompletionResult {
    std::vector<std::string> texts;  // exactly n_samples entries
    std::vector<std::string> finish_reasons;
    std::string backend_id;
    std::int64_t latency_ms = 0;
};

enum class BackendKind { http, mock };

struct BackendConfig {
    BackendKind kind = BackendKind::mock;
    std::string base_url;      // required for http
    std::string model_name;
    std::string api_key_env;   // name of the env var; empty = no auth header
    int max_retries = 2;       // at most max_retries+1 attempts
    int max_concurrency = 4;
    std::optional<int> requests_per_minute;
    std::string mock_script_path;  // required for mock
};

enum class GatewayErrorKind { Transport, AuthMissing, ScriptMiss, BadConfig };

struct GatewayError {
    GatewayErrorKind kind = GatewayErrorKind::Transport;
    std::string message;
};

class GatewayException : public std::runtime_error {
public:
    explicit GatewayException(GatewayError error)
        : std::runtime_error(error.message), error_(std::move(error)) {}

    const GatewayError& error() const { return error_; }
    GatewayErrorKind kind() const { return error_.kind; }

private:
    GatewayError error_;
};

// Injectable time source so the rate limiter and backoff are testable with
// a fake clock.
class Clock {
public:
    virtual ~Clock() = default;
    virtual std::chrono::steady_clock::time_point now() = 0;
    virtual void sleep_for(std::chrono::milliseconds d) = 0;
};

std::shared_ptr<Clock> system_clock();

// Token bucket at requests-per-minute granularity. acquire() blocks (via
// the clock) until a token is available. Thread-safe.
class RateLimiter {
public:
    RateLimiter(int requests_per_minute, std::shared_ptr<Clock> clock);
    void acquire();

private:
    double capacity_;
    double tokens_;
    double per_ms_;
    std::chrono::steady_clock::time_point last_refill_;
    std::shared_ptr<Clock> clock_;
    std::mutex mu_;
};

class Backend {
public:
    virtual ~Backend() = default;
    // Throws GatewayException on failure.
    virtual CompletionResult complete(const CompletionRequest& request) = 0;
    virtual std::string id() const = 0;
};

// Canonical prompt rendering used for mock hash matching: for each message,
// "<role>\n<content>\n".
std::string render_prompt(const std::vector<ChatMessage>& messages);

// FNV-1a 64-bit over render_prompt(messages), as 16 lowercase hex digits.
std::uint64_t fnv1a64(std::string_view data);
std::string prompt_hash(const std::vector<ChatMessage>& messages);

// Deterministic scripted backend. Rules load from a JSONL file, one rule
// per line: {"match_kind":"hash"|"contains","pattern":...,"replies":[...],
// "default":bool}. Rules are tried in file order; "hash" compares against
// prompt_hash(messages), "contains" is a substring test on the last user
// message. When nothing matches, the first rule with default=true answers.
// A rule's replies are consumed one per hit; once exhausted the last reply
// repeats.
class MockScript {
public:
    static MockScript load(const std::filesystem::path& path);
    static MockScript from_jsonl(std::string_view jsonl_text, const std::string& origin = "<inline>");

    // Throws GatewayException{ScriptMiss} when no rule matches and there is
    // no default. Thread-safe; reply cursors advance under a lock.
    std::string next_reply(const std::vector<ChatMessage>& messages);

    size_t rule_count() const { return rules_.size(); }

private:
    struct Rule {
        enum class Match { hash, contains, none };
        Match match = Match::none;
        std::string pattern;
        std::vector<std::string> replies;
        bool is_default = false;
        size_t cursor = 0;
    };

    std::vector<Rule> rules_;
    std::string origin_;
    std::unique_ptr<std::mutex> mu_ = std::make_unique<std::mutex>();  // keeps the script movable
};

std::string mock_lookup(MockScript& script, const std::vector<ChatMessage>& messages);

// Builds an HTTP or mock backend from config. Validation errors raise
// BadConfig. The clock feeds retries and rate limiting; pass a fake in
// tests, defaults to the real one.
std::unique_ptr<Backend> make_backend(const BackendConfig& config,
                                      std::shared_ptr<Clock> clock = nullptr);

CompletionResult complete(const CompletionRequest& request, const BackendConfig& config);

using SlotResult = std::variant<CompletionResult, GatewayError>;

// Executes requests with at most max_concurrency in flight. Results come
// back in input order; a failing slot carries its error without aborting
// siblings.
std::vector<SlotResult> run_batch(const std::vector<CompletionRequest>& requests,
                                  Backend& backend, int max_concurrency);

}  // namespace askbench::gateway
