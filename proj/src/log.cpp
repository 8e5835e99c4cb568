#include "aqmeis/log.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>

namespace aqmeis::log {

namespace {
std::atomic<Level> g_level{Level::Info};
std::mutex g_mutex;

void emit(Level level, const char* tag, std::string_view component, std::string_view message) {
  if (level < g_level.load()) return;
  std::lock_guard lock(g_mutex);
  std::fprintf(stderr, "[%s] %.*s: %.*s\n", tag, static_cast<int>(component.size()),
               component.data(), static_cast<int>(message.size()), message.data());
}
}  // namespace

void set_level(Level level) { g_level = level; }
void info(std::string_view c, std::string_view m) { emit(Level::Info, "info", c, m); }
void warn(std::string_view c, std::string_view m) { emit(Level::Warn, "warn", c, m); }
void error(std::string_view c, std::string_view m) { emit(Level::Error, "error", c, m); }

}  // namespace aqmeis::log
