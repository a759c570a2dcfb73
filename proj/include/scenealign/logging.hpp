// Minimal stderr logger gated by the SCENE_ALIGN_LOG environment variable
// (error | warn | info | debug; default warn).

#pragma once

#include <cstdlib>
#include <iostream>
#include <string>

namespace scenealign {

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

inline LogLevel log_threshold() {
    static const LogLevel level = [] {
        const char* raw = std::getenv("SCENE_ALIGN_LOG");
        if (!raw) return LogLevel::kWarn;
        const std::string v(raw);
        if (v == "error") return LogLevel::kError;
        if (v == "warn") return LogLevel::kWarn;
        if (v == "info") return LogLevel::kInfo;
        if (v == "debug") return LogLevel::kDebug;
        return LogLevel::kWarn;
    }();
    return level;
}

inline void log(LogLevel level, const std::string& message) {
    if (level > log_threshold()) return;
    static const char* names[] = {"error", "warn", "info", "debug"};
    std::cerr << "[scenealign] " << names[static_cast<int>(level)] << ": " << message << '\n';
}

}  // namespace scenealign
