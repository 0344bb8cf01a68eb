#pragma once

#include <cmath>
#include <cstdint>

namespace calikit {

// Banker's rounding. nearbyint honors the ambient rounding mode, which is
// round-to-nearest-even everywhere we run; all count computations (baseline
// top-k, resample class sizes, generator class sizes) go through this.
inline std::int64_t round_half_even(double x) {
  return static_cast<std::int64_t>(std::nearbyint(x));
}

}  // namespace calikit
