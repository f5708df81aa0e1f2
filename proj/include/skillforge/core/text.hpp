#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace skillforge::text {

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::vector<std::string> split_lines(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool starts_with_ci(std::string_view s, std::string_view prefix);
bool contains_ci(std::string_view haystack, std::string_view needle);
std::string to_lower(std::string_view s);
std::optional<long long> parse_int(std::string_view s);
std::optional<double> parse_double(std::string_view s);
// Shortest decimal representation that round-trips; NaN/Inf spelled as Prometheus does.
std::string format_double(double v);
// Lower-cased alphanumeric runs; every other character separates tokens.
std::vector<std::string> tokenize_words(std::string_view s);

}  // namespace skillforge::text
