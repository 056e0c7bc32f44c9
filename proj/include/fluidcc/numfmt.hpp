#pragma once

#include <string>

namespace fluidcc {

/// Shortest decimal string that parses back to the same double.
std::string format_double(double value);

}  // namespace fluidcc
