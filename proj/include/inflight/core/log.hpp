#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>

namespace inflight::log {

enum class Level { Debug, Info, Notice, Warning, Error };

using Sink = std::function<void(Level, std::string_view)>;

namespace detail {
inline std::mutex& mutex() {
  static std::mutex m;
  return m;
}
inline Sink& sink() {
  static Sink s = [](Level lvl, std::string_view msg) {
    if (lvl < Level::Notice) return;
    static constexpr const char* names[] = {"debug", "info", "notice", "warning", "error"};
    std::cerr << "[inflight:" << names[static_cast<int>(lvl)] << "] " << msg << '\n';
  };
  return s;
}
}  // namespace detail

inline void set_sink(Sink s) {
  std::lock_guard lock(detail::mutex());
  detail::sink() = std::move(s);
}

inline void write(Level lvl, std::string_view msg) {
  std::lock_guard lock(detail::mutex());
  if (detail::sink()) detail::sink()(lvl, msg);
}

inline void info(std::string_view msg) { write(Level::Info, msg); }
inline void notice(std::string_view msg) { write(Level::Notice, msg); }
inline void warning(std::string_view msg) { write(Level::Warning, msg); }
inline void error(std::string_view msg) { write(Level::Error, msg); }

}  // namespace inflight::log
