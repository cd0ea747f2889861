#pragma once

#include <string_view>

// Minimal leveled logging to stderr. Library code only emits warnings and
// progress lines; the CLI and tests choose the threshold.
namespace bnpiv::log {

enum class Level { quiet = 0, warn = 1, info = 2 };

void set_level(Level level) noexcept;
[[nodiscard]] Level level() noexcept;

void warn(std::string_view message);
void info(std::string_view message);

// Number of warnings emitted since process start (or the last reset).
[[nodiscard]] long warning_count() noexcept;
void reset_warning_count() noexcept;

}  // namespace bnpiv::log
