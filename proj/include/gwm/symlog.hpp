#pragma once

#include <cmath>

namespace gwm {

// Signed logarithmic squashing: keeps regression targets of wildly different
// magnitudes on a comparable scale while staying exactly invertible.
inline double symlog(double x) {
    return x >= 0.0 ? std::log(1.0 + x) : -std::log(1.0 - x);
}

inline double symexp(double x) {
    return x >= 0.0 ? std::exp(x) - 1.0 : 1.0 - std::exp(-x);
}

}  // namespace gwm
