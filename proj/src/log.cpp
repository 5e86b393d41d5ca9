#include "snk/log.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace snk::log {
namespace {

std::mutex g_mutex;

void default_sink(Level level, std::string_view message) {
  std::cerr << (level == Level::Warning ? "[warn] " : "[info] ") << message << '\n';
}

Sink& sink_ref() {
  static Sink sink = default_sink;
  return sink;
}

void emit(Level level, std::string_view message) {
  std::lock_guard lock(g_mutex);
  if (sink_ref()) sink_ref()(level, message);
}

}  // namespace

Sink set_sink(Sink sink) {
  std::lock_guard lock(g_mutex);
  return std::exchange(sink_ref(), std::move(sink));
}

void info(std::string_view message) { emit(Level::Info, message); }
void warn(std::string_view message) { emit(Level::Warning, message); }

}  // namespace snk::log
