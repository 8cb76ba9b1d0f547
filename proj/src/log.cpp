#include "acpo/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace acpo::log {
namespace {

Level from_env() {
  const char* raw = std::getenv("ACPO_LOG");
  if (raw == nullptr) return Level::error;
  const std::string v(raw);
  if (v == "debug") return Level::debug;
  if (v == "info") return Level::info;
  return Level::error;
}

std::atomic<int>& current() {
  static std::atomic<int> level{static_cast<int>(from_env())};
  return level;
}

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

Level threshold() { return static_cast<Level>(current().load()); }

void set_threshold(Level level) { current().store(static_cast<int>(level)); }

void write(Level level, std::string_view message) {
  if (static_cast<int>(level) > current().load()) return;
  static constexpr const char* names[] = {"error", "info", "debug"};
  std::lock_guard lock(sink_mutex());
  std::cerr << "acpo[" << names[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace acpo::log
