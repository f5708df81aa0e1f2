#include "skillforge/core/quantity.hpp"

#include <cmath>

#include "skillforge/core/error.hpp"
#include "skillforge/core/text.hpp"

namespace skillforge::quantity {

std::int64_t parse_cpu_millis(std::string_view text) {
  auto t = text::trim(text);
  if (t.empty()) throw InvalidArgument("empty cpu quantity");
  if (t.back() == 'm') {
    auto v = text::parse_int(t.substr(0, t.size() - 1));
    if (!v || *v < 0) throw InvalidArgument("invalid cpu quantity \"" + std::string(text) + "\"");
    return *v;
  }
  auto v = text::parse_double(t);
  if (!v || *v < 0 || !std::isfinite(*v)) {
    throw InvalidArgument("invalid cpu quantity \"" + std::string(text) + "\"");
  }
  return static_cast<std::int64_t>(std::llround(*v * 1000.0));
}

std::int64_t parse_memory_bytes(std::string_view text) {
  auto t = text::trim(text);
  struct Suffix {
    std::string_view s;
    std::int64_t mult;
  };
  static constexpr Suffix kSuffixes[] = {{"Ki", kKi},      {"Mi", kMi},      {"Gi", kGi},
                                         {"k", 1000},      {"K", 1000},      {"M", 1000000},
                                         {"G", 1000000000}};
  std::int64_t mult = 1;
  for (const auto& sfx : kSuffixes) {
    if (t.size() > sfx.s.size() && t.substr(t.size() - sfx.s.size()) == sfx.s) {
      mult = sfx.mult;
      t.remove_suffix(sfx.s.size());
      break;
    }
  }
  auto v = text::parse_double(t);
  if (!v || *v < 0 || !std::isfinite(*v)) {
    throw InvalidArgument("invalid memory quantity \"" + std::string(text) + "\"");
  }
  return static_cast<std::int64_t>(std::llround(*v * static_cast<double>(mult)));
}

std::string format_cpu(std::int64_t millis) {
  if (millis % 1000 == 0) return std::to_string(millis / 1000);
  return std::to_string(millis) + "m";
}

std::string format_memory(std::int64_t bytes) {
  if (bytes != 0 && bytes % kGi == 0) return std::to_string(bytes / kGi) + "Gi";
  if (bytes != 0 && bytes % kMi == 0) return std::to_string(bytes / kMi) + "Mi";
  if (bytes != 0 && bytes % kKi == 0) return std::to_string(bytes / kKi) + "Ki";
  return std::to_string(bytes);
}

std::string format_memory_mi(std::int64_t bytes) { return std::to_string(bytes / kMi) + "Mi"; }

}  // namespace skillforge::quantity
