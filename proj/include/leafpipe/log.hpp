#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace leafpipe::log {

enum class Level : int { quiet = 0, warn = 1, info = 2, debug = 3 };

// Log level comes from LEAFPIPE_LOG (quiet|warn|info|debug), default info.
inline Level level() {
    static Level cached = [] {
        const char* env = std::getenv("LEAFPIPE_LOG");
        if (!env) return Level::info;
        if (std::strcmp(env, "quiet") == 0) return Level::quiet;
        if (std::strcmp(env, "warn") == 0) return Level::warn;
        if (std::strcmp(env, "debug") == 0) return Level::debug;
        return Level::info;
    }();
    return cached;
}

inline void warn(const std::string& msg) {
    if (level() >= Level::warn) std::fprintf(stderr, "[warn] %s\n", msg.c_str());
}

inline void info(const std::string& msg) {
    if (level() >= Level::info) std::fprintf(stderr, "[info] %s\n", msg.c_str());
}

inline void debug(const std::string& msg) {
    if (level() >= Level::debug) std::fprintf(stderr, "[debug] %s\n", msg.c_str());
}

}  // namespace leafpipe::log
