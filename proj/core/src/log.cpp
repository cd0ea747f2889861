#include "bnpiv/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace bnpiv::log {
namespace {

std::atomic<Level> g_level{Level::warn};
std::atomic<long> g_warnings{0};
std::mutex g_sink_mutex;

void emit(std::string_view tag, std::string_view message) {
    std::lock_guard<std::mutex> lock(g_sink_mutex);
    std::clog << "[bnpiv " << tag << "] " << message << '\n';
}

}  // namespace

void set_level(Level level) noexcept { g_level.store(level); }
Level level() noexcept { return g_level.load(); }

void warn(std::string_view message) {
    g_warnings.fetch_add(1);
    if (g_level.load() >= Level::warn) emit("warn", message);
}

void info(std::string_view message) {
    if (g_level.load() >= Level::info) emit("info", message);
}

long warning_count() noexcept { return g_warnings.load(); }
void reset_warning_count() noexcept { g_warnings.store(0); }

}  // namespace bnpiv::log
