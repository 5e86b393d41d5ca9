#pragma once

#include <functional>
#include <string_view>

namespace snk::log {

enum class Level { Info, Warning };

using Sink = std::function<void(Level, std::string_view)>;

/// Replaces the process-wide sink. Returns the previous one so callers (tests)
/// can restore it.
Sink set_sink(Sink sink);

void info(std::string_view message);
void warn(std::string_view message);

}  // namespace snk::log
