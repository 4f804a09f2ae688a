#pragma once

#include <string>
#include <string_view>

namespace crosslight {

// Shortest text that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

}  // namespace crosslight
