#include "cpsim/types.hpp"

#include <cmath>
#include <numbers>

namespace cpsim {

SimTimeNs to_nanos(double seconds) { return std::llround(seconds * 1e9); }

double wrap_angle(double radians) {
  double wrapped = std::remainder(radians, 2.0 * std::numbers::pi);
  if (wrapped <= -std::numbers::pi) wrapped += 2.0 * std::numbers::pi;
  return wrapped;
}

}  // namespace cpsim
