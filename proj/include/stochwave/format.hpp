#pragma once

#include <string>

namespace stochwave {

/// Shortest decimal that round-trips to the same double ("0.25", "1e-07").
std::string format_double(double value);

}  // namespace stochwave
