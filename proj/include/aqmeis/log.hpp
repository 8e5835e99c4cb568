#pragma once

#include <string_view>

namespace aqmeis::log {

enum class Level { Debug, Info, Warn, Error, Off };

void set_level(Level level);
void info(std::string_view component, std::string_view message);
void warn(std::string_view component, std::string_view message);
void error(std::string_view component, std::string_view message);

}  // namespace aqmeis::log
