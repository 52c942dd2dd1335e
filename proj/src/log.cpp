#include "askbench/log.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>
#include <stdexcept>

namespace askbench::log {

namespace {
std::atomic<Level> g_level{Level::info};
std::mutex g_mu;

const char* tag(Level level) {
    switch (level) {
        case Level::debug: return "debug";
        case Level::info: return "info";
        case Level::warn: return "warn";
        case Level::error: return "error";
    }
    return "?";
}
}  // namespace

void set_level(Level level) { g_level.store(level); }

Level level_from_name(std::string_view name) {
    if (name == "debug") return Level::debug;
    if (name == "info") return Level::info;
    if (name == "warn") return Level::warn;
    if (name == "error") return Level::error;
    throw std::invalid_argument("unknown log level: " + std::string(name));
}

void write(Level level, std::string_view message) {
    if (level < g_level.load()) return;
    std::lock_guard lock(g_mu);
    std::fprintf(stderr, "[%s] %.*s\n", tag(level), static_cast<int>(message.size()), message.data());
}

}  // namespace askbench::log
