#pragma once

#include <iosfwd>
#include <string_view>

namespace gem::log {

enum class Level { quiet, warning, info };

void set_level(Level level);
Level level();

/// Redirects messages; nullptr restores stderr.
void set_sink(std::ostream* sink);

void warning(std::string_view message);
void info(std::string_view message);

}  // namespace gem::log
