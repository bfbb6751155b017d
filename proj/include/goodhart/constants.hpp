#pragma once

#include <limits>

namespace goodhart {

// Ratio of a circle's perimeter to its radius.
inline constexpr double tau = 6.283185307179586476925286766559;
inline constexpr double sqrt12 = 3.4641016151377545870548926830117;
inline constexpr double ln10 = 2.3025850929940456840179914546844;
inline constexpr double inf = std::numeric_limits<double>::infinity();

}  // namespace goodhart
