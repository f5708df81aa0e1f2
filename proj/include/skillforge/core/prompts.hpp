#pragma once

#include <map>
#include <string>
#include <string_view>

namespace skillforge::prompts {

// Loads the bundled template assets/prompts/<name>.txt and replaces every {{key}}.
// Throws Error for an unknown template or a placeholder without a value.
std::string render(std::string_view name, const std::map<std::string, std::string>& vars = {});

}  // namespace skillforge::prompts
