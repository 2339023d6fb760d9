#pragma once

#include <charconv>
#include <string>
#include <system_error>

#include "seeplan/error.hpp"

namespace seeplan {

/// Shortest decimal text that parses back to exactly `x`.
inline std::string format_double(double x) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    if (ec != std::errc()) throw IoError("cannot format floating-point value");
    return {buf, end};
}

inline double parse_double(const std::string& text) {
    double out = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last) throw IoError("not a number: '" + text + "'");
    return out;
}

template <class Int>
Int parse_integer(const std::string& text) {
    Int out{};
    const char* first = text.data();
    const char* last = first + text.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last) throw IoError("not an integer: '" + text + "'");
    return out;
}

}  // namespace seeplan
