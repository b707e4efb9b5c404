#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace insample {

/// Shortest decimal string that parses back to exactly `x`.
std::string format_real(double x);

/// Shortest round-trip string in plain positional notation (no exponent).
std::string format_fixed(double x);

/// Strict full-string parses; throw std::invalid_argument on junk.
double parse_real(std::string_view text);
unsigned long long parse_unsigned(std::string_view text);

std::vector<std::string> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

}  // namespace insample
