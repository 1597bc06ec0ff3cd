#pragma once

#include <cstdio>
#include <string>

namespace densim::io {

// Fixed shortest-ish float formatting so identical values always print the
// same bytes regardless of locale or stream state.
inline std::string fmt_g(double v, int precision = 12) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

}  // namespace densim::io
