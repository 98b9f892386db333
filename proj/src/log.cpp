#include "gem/log.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>
#include <ostream>

namespace gem::log {
namespace {

std::atomic<Level> g_level{Level::warning};
std::mutex g_mutex;
std::ostream* g_sink = nullptr;

void emit(const char* prefix, std::string_view message) {
  std::lock_guard lock(g_mutex);
  if (g_sink) {
    *g_sink << prefix << message << '\n';
    return;
  }
  std::fprintf(stderr, "%s%.*s\n", prefix, static_cast<int>(message.size()), message.data());
}

}  // namespace

void set_level(Level level) { g_level.store(level); }
Level level() { return g_level.load(); }

void set_sink(std::ostream* sink) {
  std::lock_guard lock(g_mutex);
  g_sink = sink;
}

void warning(std::string_view message) {
  if (g_level.load() >= Level::warning) emit("warning: ", message);
}

void info(std::string_view message) {
  if (g_level.load() >= Level::info) emit("", message);
}

}  // namespace gem::log
