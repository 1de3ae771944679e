#pragma once

#include <atomic>
#include <iostream>
#include <string_view>

namespace pet::log {

namespace detail {
inline std::atomic<bool>& quiet_flag() {
  static std::atomic<bool> flag{false};
  return flag;
}
} // namespace detail

inline void set_quiet(bool quiet) { detail::quiet_flag() = quiet; }

inline void warn(std::string_view message) {
  if (!detail::quiet_flag()) std::cerr << "warning: " << message << '\n';
}

} // namespace pet::log
