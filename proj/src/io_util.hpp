#pragma once

#include <cstdio>
#include <string>

namespace qpcert {

/// Decimal encoding with 17 significant digits; round-trips IEEE doubles.
inline std::string format_real(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace qpcert
