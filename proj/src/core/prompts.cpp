#include "skillforge/core/prompts.hpp"

#include "skillforge/assets.hpp"
#include "skillforge/core/error.hpp"

namespace skillforge::prompts {

std::string render(std::string_view name, const std::map<std::string, std::string>& vars) {
  const std::string key = "assets/prompts/" + std::string(name) + ".txt";
  auto tpl = assets::find(key);
  if (!tpl) throw Error("missing prompt template " + key);
  std::string out;
  size_t pos = 0;
  while (true) {
    auto open = tpl->find("{{", pos);
    if (open == std::string_view::npos) break;
    auto close = tpl->find("}}", open);
    if (close == std::string_view::npos) break;
    out.append(tpl->substr(pos, open - pos));
    std::string var(tpl->substr(open + 2, close - open - 2));
    auto it = vars.find(var);
    if (it == vars.end()) throw Error("prompt " + std::string(name) + " needs a value for {{" + var + "}}");
    out += it->second;
    pos = close + 2;
  }
  out.append(tpl->substr(pos));
  return out;
}

}  // namespace skillforge::prompts
