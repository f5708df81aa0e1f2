#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace skillforge::quantity {

// "100m" -> 100, "0.5" -> 500, "2" -> 2000. Throws InvalidArgument.
std::int64_t parse_cpu_millis(std::string_view text);
// "100Mi", "1Gi", "512Ki", "1M", "1500". Throws InvalidArgument.
std::int64_t parse_memory_bytes(std::string_view text);

std::string format_cpu(std::int64_t millis);
std::string format_memory(std::int64_t bytes);
// kubectl top style: whole mebibytes, rounded down.
std::string format_memory_mi(std::int64_t bytes);

constexpr std::int64_t kKi = 1024;
constexpr std::int64_t kMi = 1024 * kKi;
constexpr std::int64_t kGi = 1024 * kMi;

}  // namespace skillforge::quantity
