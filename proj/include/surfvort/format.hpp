#pragma once

#include <string>

namespace surfvort {

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace surfvort
