#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace posekit::detail {

// Shortest round-trip decimal form of a double; deterministic and
// locale-independent, so emitted files and reports are byte-stable.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace posekit::detail
