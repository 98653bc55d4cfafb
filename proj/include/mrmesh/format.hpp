#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace mrmesh {

/// Float rendered at 6 significant digits (printf %g), the precision used by
/// every CSV this project writes.
inline std::string fmt6(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace mrmesh
