#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "askbench/gateway.hpp"

#include "askbench/concurrency.hpp"
#include "askbench/log.hpp"

#include <httplib.h>
#include <json.hpp>
#include <fmt/core.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

namespace askbench::gateway {

std::string_view role_name(Role role) {
    switch (role) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

Role role_from_name(std::string_view name) {
    if (name == "system") return Role::system;
    if (name == "assistant") return Role::assistant;
    if (name == "user") return Role::user;
    throw GatewayException({GatewayErrorKind::BadConfig, fmt::format("unknown role \"{}\"", std::string(name))});
}

std::string render_prompt(const std::vector<ChatMessage>& messages) {
    std::string out;
    for (const ChatMessage& m : messages) {
        out += role_name(m.role);
        out += '\n';
        out += m.content;
        out += '\n';
    }
    return out;
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string prompt_hash(const std::vector<ChatMessage>& messages) {
    return fmt::format("{:016x}", fnv1a64(render_prompt(messages)));
}

namespace {

class SystemClock final : public Clock {
public:
    std::chrono::steady_clock::time_point now() override { return std::chrono::steady_clock::now(); }
    void sleep_for(std::chrono::milliseconds d) override { std::this_thread::sleep_for(d); }
};

void validate(const BackendConfig& config) {
    if (config.kind == BackendKind::http && config.base_url.empty()) {
        throw GatewayException({GatewayErrorKind::BadConfig, "http backend requires base_url"});
    }
    if (config.kind == BackendKind::mock && config.mock_script_path.empty()) {
        throw GatewayException({GatewayErrorKind::BadConfig, "mock backend requires mock_script_path"});
    }
    if (config.max_retries < 0 || config.max_concurrency < 1) {
        throw GatewayException({GatewayErrorKind::BadConfig, "max_retries must be >= 0 and max_concurrency >= 1"});
    }
    if (config.requests_per_minute && *config.requests_per_minute < 1) {
        throw GatewayException({GatewayErrorKind::BadConfig, "requests_per_minute must be positive"});
    }
}

}  // namespace

std::shared_ptr<Clock> system_clock() {
    static std::shared_ptr<Clock> instance = std::make_shared<SystemClock>();
    return instance;
}

RateLimiter::RateLimiter(int requests_per_minute, std::shared_ptr<Clock> clock)
    : capacity_(static_cast<double>(requests_per_minute)),
      tokens_(static_cast<double>(requests_per_minute)),
      per_ms_(static_cast<double>(requests_per_minute) / 60000.0),
      clock_(std::move(clock)) {
    last_refill_ = clock_->now();
}

void RateLimiter::acquire() {
    for (;;) {
        std::chrono::milliseconds wait{0};
        {
            std::lock_guard lock(mu_);
            auto now = clock_->now();
            auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(now - last_refill_);
            if (elapsed.count() > 0) {
                tokens_ = std::min(capacity_, tokens_ + static_cast<double>(elapsed.count()) * per_ms_);
                last_refill_ = now;
            }
            if (tokens_ >= 1.0) {
                tokens_ -= 1.0;
                return;
            }
            // ceil, not floor+1: oversleeping a refill makes the next wait
            // come up short by the same amount. Undersleep from FP rounding
            // is caught by the re-check on the next loop pass.
            wait = std::chrono::milliseconds(
                static_cast<std::int64_t>(std::ceil((1.0 - tokens_) / per_ms_)));
        }
        clock_->sleep_for(wait);
    }
}

// ---------------------------------------------------------------------------
// Mock backend

MockScript MockScript::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw GatewayException({GatewayErrorKind::BadConfig, "cannot open mock script " + path.string()});
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_jsonl(buf.str(), path.string());
}

MockScript MockScript::from_jsonl(std::string_view jsonl_text, const std::string& origin) {
    MockScript script;
    script.origin_ = origin;

    std::istringstream in{std::string(jsonl_text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw GatewayException({GatewayErrorKind::BadConfig,
                                    fmt::format("{}:{}: malformed rule: {}", origin, lineno, e.what())});
        }
        Rule rule;
        rule.is_default = j.value("default", false);
        if (j.contains("match_kind")) {
            std::string kind = j["match_kind"].get<std::string>();
            if (kind == "hash") {
                rule.match = Rule::Match::hash;
            } else if (kind == "contains") {
                rule.match = Rule::Match::contains;
            } else {
                throw GatewayException({GatewayErrorKind::BadConfig,
                                        fmt::format("{}:{}: unknown match_kind \"{}\"", origin, lineno, kind)});
            }
            if (!j.contains("pattern") || !j["pattern"].is_string()) {
                throw GatewayException({GatewayErrorKind::BadConfig,
                                        fmt::format("{}:{}: rule needs a string pattern", origin, lineno)});
            }
            rule.pattern = j["pattern"].get<std::string>();
        } else if (!rule.is_default) {
            throw GatewayException({GatewayErrorKind::BadConfig,
                                    fmt::format("{}:{}: rule needs match_kind or default=true", origin, lineno)});
        }
        if (!j.contains("replies") || !j["replies"].is_array() || j["replies"].empty()) {
            throw GatewayException({GatewayErrorKind::BadConfig,
                                    fmt::format("{}:{}: rule needs a non-empty replies array", origin, lineno)});
        }
        for (const auto& r : j["replies"]) rule.replies.push_back(r.get<std::string>());
        script.rules_.push_back(std::move(rule));
    }
    return script;
}

std::string MockScript::next_reply(const std::vector<ChatMessage>& messages) {
    std::string hash;
    const std::string* last_user = nullptr;
    for (const ChatMessage& m : messages) {
        if (m.role == Role::user) last_user = &m.content;
    }

    std::lock_guard lock(*mu_);
    Rule* fallback = nullptr;
    for (Rule& rule : rules_) {
        bool matched = false;
        switch (rule.match) {
            case Rule::Match::hash:
                if (hash.empty()) hash = prompt_hash(messages);
                matched = rule.pattern == hash;
                break;
            case Rule::Match::contains:
                matched = last_user && last_user->find(rule.pattern) != std::string::npos;
                break;
            case Rule::Match::none:
                break;
        }
        if (matched) {
            size_t i = std::min(rule.cursor, rule.replies.size() - 1);
            ++rule.cursor;
            return rule.replies[i];
        }
        if (rule.is_default && !fallback) fallback = &rule;
    }
    if (fallback) {
        size_t i = std::min(fallback->cursor, fallback->replies.size() - 1);
        ++fallback->cursor;
        return fallback->replies[i];
    }
    throw GatewayException({GatewayErrorKind::ScriptMiss,
                            fmt::format("{}: no rule matches and no default; last user message: \"{}\"",
                                        origin_, last_user ? *last_user : std::string("<none>"))});
}

std::string mock_lookup(MockScript& script, const std::vector<ChatMessage>& messages) {
    return script.next_reply(messages);
}

namespace {

class MockBackend final : public Backend {
public:
    MockBackend(const BackendConfig& config, std::shared_ptr<Clock> clock)
        : script_(MockScript::load(config.mock_script_path)),
          id_(fmt::format("mock:{}", std::filesystem::path(config.mock_script_path).filename().string())),
          clock_(std::move(clock)) {}

    CompletionResult complete(const CompletionRequest& request) override {
        auto start = clock_->now();
        CompletionResult result;
        result.backend_id = id_;
        result.texts.reserve(static_cast<size_t>(request.n_samples));
        for (int i = 0; i < request.n_samples; ++i) {
            result.texts.push_back(script_.next_reply(request.messages));
            result.finish_reasons.emplace_back("stop");
        }
        result.latency_ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(clock_->now() - start).count();
        return result;
    }

    std::string id() const override { return id_; }

private:
    MockScript script_;
    std::string id_;
    std::shared_ptr<Clock> clock_;
};

// ---------------------------------------------------------------------------
// HTTP backend (OpenAI-compatible chat completions)

struct ParsedUrl {
    std::string host;   // scheme://host[:port]
    std::string prefix; // path prefix, no trailing slash
};

ParsedUrl split_base_url(const std::string& base_url) {
    auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) {
        throw GatewayException({GatewayErrorKind::BadConfig, "base_url needs a scheme: " + base_url});
    }
    auto path_start = base_url.find('/', scheme_end + 3);
    ParsedUrl u;
    if (path_start == std::string::npos) {
        u.host = base_url;
    } else {
        u.host = base_url.substr(0, path_start);
        u.prefix = base_url.substr(path_start);
        while (!u.prefix.empty() && u.prefix.back() == '/') u.prefix.pop_back();
    }
    return u;
}

class HttpBackend final : public Backend {
public:
    HttpBackend(const BackendConfig& config, std::shared_ptr<Clock> clock)
        : config_(config),
          url_(split_base_url(config.base_url)),
          id_(fmt::format("http:{}", config.model_name)),
          clock_(std::move(clock)),
          jitter_rng_(std::random_device{}()) {
        if (config_.requests_per_minute) {
            limiter_ = std::make_unique<RateLimiter>(*config_.requests_per_minute, clock_);
        }
    }

    CompletionResult complete(const CompletionRequest& request) override {
        std::string bearer;
        if (!config_.api_key_env.empty()) {
            const char* key = std::getenv(config_.api_key_env.c_str());
            if (!key || !*key) {
                throw GatewayException({GatewayErrorKind::AuthMissing,
                                        "environment variable " + config_.api_key_env + " is not set"});
            }
            bearer = key;
        }

        nlohmann::json body{
            {"model", config_.model_name},
            {"temperature", request.temperature},
            {"top_p", request.top_p},
            {"max_tokens", request.max_tokens},
            {"n", request.n_samples},
        };
        nlohmann::json messages = nlohmann::json::array();
        for (const ChatMessage& m : request.messages) {
            messages.push_back({{"role", std::string(role_name(m.role))}, {"content", m.content}});
        }
        body["messages"] = std::move(messages);
        const std::string payload = body.dump();

        auto start = clock_->now();
        std::string last_error;
        const int attempts = config_.max_retries + 1;
        for (int attempt = 0; attempt < attempts; ++attempt) {
            if (attempt > 0) {
                clock_->sleep_for(backoff_delay(attempt - 1));
            }
            if (limiter_) limiter_->acquire();
            log::debug(fmt::format("http attempt {}/{} tag={} model={}", attempt + 1, attempts,
                                   request.tag, config_.model_name));

            httplib::Client client(url_.host);
            client.set_connection_timeout(10, 0);
            client.set_read_timeout(300, 0);
            httplib::Headers headers;
            if (!bearer.empty()) headers.emplace("Authorization", "Bearer " + bearer);

            auto res = client.Post(url_.prefix + "/chat/completions", headers, payload, "application/json");
            if (!res) {
                last_error = fmt::format("transport failure: {}", httplib::to_string(res.error()));
                continue;  // timeouts and connection errors are transient
            }
            if (res->status == 429 || res->status >= 500) {
                last_error = fmt::format("HTTP {}: {}", res->status, res->body.substr(0, 200));
                continue;
            }
            if (res->status != 200) {
                throw GatewayException({GatewayErrorKind::Transport,
                                        fmt::format("HTTP {}: {}", res->status, res->body.substr(0, 500))});
            }
            return parse_response(res->body, request, start);
        }
        throw GatewayException({GatewayErrorKind::Transport,
                                fmt::format("gave up after {} attempts: {}", attempts, last_error)});
    }

    std::string id() const override { return id_; }

private:
    std::chrono::milliseconds backoff_delay(int retry_index) {
        double base = 1000.0;
        for (int i = 0; i < retry_index; ++i) base *= 2.0;
        double jitter;
        {
            std::lock_guard lock(rng_mu_);
            jitter = std::uniform_real_distribution<double>(0.5, 1.5)(jitter_rng_);
        }
        return std::chrono::milliseconds(static_cast<std::int64_t>(base * jitter));
    }

    CompletionResult parse_response(const std::string& body, const CompletionRequest& request,
                                    std::chrono::steady_clock::time_point start) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& e) {
            throw GatewayException({GatewayErrorKind::Transport,
                                    fmt::format("unparsable completion body: {}", e.what())});
        }
        if (!j.contains("choices") || !j["choices"].is_array()) {
            throw GatewayException({GatewayErrorKind::Transport, "completion body has no choices array"});
        }
        CompletionResult result;
        result.backend_id = id_;
        for (const auto& choice : j["choices"]) {
            if (!choice.contains("message") || !choice["message"].contains("content")) {
                throw GatewayException({GatewayErrorKind::Transport, "choice without message.content"});
            }
            result.texts.push_back(choice["message"]["content"].is_null()
                                       ? std::string()
                                       : choice["message"]["content"].get<std::string>());
            result.finish_reasons.push_back(choice.value("finish_reason", "stop"));
        }
        if (result.texts.size() != static_cast<size_t>(request.n_samples)) {
            throw GatewayException({GatewayErrorKind::Transport,
                                    fmt::format("requested n={} but got {} choices", request.n_samples,
                                                result.texts.size())});
        }
        result.latency_ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(clock_->now() - start).count();
        return result;
    }

    BackendConfig config_;
    ParsedUrl url_;
    std::string id_;
    std::shared_ptr<Clock> clock_;
    std::unique_ptr<RateLimiter> limiter_;
    std::mt19937_64 jitter_rng_;
    std::mutex rng_mu_;
};

}  // namespace

std::unique_ptr<Backend> make_backend(const BackendConfig& config, std::shared_ptr<Clock> clock) {
    validate(config);
    if (!clock) clock = system_clock();
    if (config.kind == BackendKind::mock) return std::make_unique<MockBackend>(config, clock);
    return std::make_unique<HttpBackend>(config, clock);
}

CompletionResult complete(const CompletionRequest& request, const BackendConfig& config) {
    return make_backend(config)->complete(request);
}

std::vector<SlotResult> run_batch(const std::vector<CompletionRequest>& requests, Backend& backend,
                                  int max_concurrency) {
    return parallel_map(requests.size(), max_concurrency, [&](size_t i) -> SlotResult {
        try {
            return backend.complete(requests[i]);
        } catch (const GatewayException& e) {
            return e.error();
        } catch (const std::exception& e) {
            return GatewayError{GatewayErrorKind::Transport, e.what()};
        }
    });
}

}  // namespace askbench::gateway
