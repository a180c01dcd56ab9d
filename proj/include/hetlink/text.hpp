#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hetlink {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

/// Fixed-point rendering with `digits` decimals.
std::string format_fixed(double value, int digits);

/// Strict full-string parse; returns false on trailing garbage or empty input.
bool parse_double(std::string_view text, double& out);
bool parse_int(std::string_view text, long long& out);

std::vector<std::string> split(std::string_view text, char delimiter);
std::string_view trim(std::string_view text);
std::string join(const std::vector<std::string>& parts, std::string_view delimiter);

} // namespace hetlink
