#include "crosslight/numfmt.hpp"

#include <charconv>
#include <stdexcept>

namespace crosslight {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last)
        throw std::invalid_argument("not a number: '" + std::string(text) + "'");
    return v;
}

}  // namespace crosslight
