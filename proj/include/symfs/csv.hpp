#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace symfs {

/// Shortest round-trippable decimal form ("%.17g"); "nan"/"inf" for non-finite.
std::string format_real(double v);

/// Fixed-point with `decimals` digits after the point.
std::string format_fixed(double v, int decimals);

std::vector<std::string> split(std::string_view text, char sep);

std::string_view trim(std::string_view text);

}  // namespace symfs
