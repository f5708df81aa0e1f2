#pragma once

#include <optional>
#include <string_view>
#include <vector>

// Files under fixtures/ and assets/ compiled into the library.
namespace skillforge::assets {

std::optional<std::string_view> find(std::string_view name);
std::vector<std::string_view> names();

}  // namespace skillforge::assets
