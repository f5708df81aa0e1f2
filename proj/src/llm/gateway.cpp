#include "skillforge/llm/gateway.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "skillforge/assets.hpp"
#include "skillforge/core/text.hpp"

namespace skillforge::llm {
namespace {

using nlohmann::json;

void reject_unknown(const json& doc, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!doc.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : doc.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(where + ": unknown key \"" + key + "\"");
    }
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::curriculum: return "curriculum";
    case Role::curator: return "curator";
    case Role::planner: return "planner";
  }
  return "planner";
}

std::optional<Role> parse_role(std::string_view text) {
  for (auto r : {Role::curriculum, Role::curator, Role::planner}) {
    if (to_string(r) == text) return r;
  }
  return std::nullopt;
}

LlmConfig LlmConfig::defaults() {
  LlmConfig c;
  c.routes[Role::curriculum] = {Role::curriculum, "o1", 4096, 1.0, false};
  c.routes[Role::curator] = {Role::curator, "o1", 4096, 1.0, false};
  c.routes[Role::planner] = {Role::planner, "gpt-4o", 1024, 0.0, true};
  c.prices["o1"] = {15.0, 60.0};
  c.prices["gpt-4o"] = {2.5, 10.0};
  return c;
}

LlmConfig LlmConfig::from_json(const json& doc) {
  reject_unknown(doc, {"mode", "endpoint", "api_key_env", "routes", "prices", "budget_usd", "script_path",
                       "timeout_seconds"},
                 "llm config");
  LlmConfig c = defaults();
  try {
    c.mode = doc.value("mode", c.mode);
    c.endpoint = doc.value("endpoint", c.endpoint);
    c.api_key_env = doc.value("api_key_env", c.api_key_env);
    c.budget_usd = doc.value("budget_usd", c.budget_usd);
    c.script_path = doc.value("script_path", c.script_path);
    c.timeout_seconds = doc.value("timeout_seconds", c.timeout_seconds);
    if (doc.contains("routes")) {
      reject_unknown(doc["routes"], {"curriculum", "curator", "planner"}, "routes");
      for (const auto& [name, r] : doc["routes"].items()) {
        reject_unknown(r, {"model", "max_tokens", "temperature", "low_latency"}, "routes." + name);
        Role role = *parse_role(name);
        ModelRoute& route = c.routes[role];
        route.role = role;
        route.model_id = r.value("model", route.model_id);
        route.max_tokens = r.value("max_tokens", route.max_tokens);
        route.temperature = r.value("temperature", route.temperature);
        route.low_latency = r.value("low_latency", route.low_latency);
      }
    }
    if (doc.contains("prices")) {
      for (const auto& [model, p] : doc["prices"].items()) {
        reject_unknown(p, {"usd_per_mtok_in", "usd_per_mtok_out"}, "prices." + model);
        c.prices[model] = {p.value("usd_per_mtok_in", 0.0), p.value("usd_per_mtok_out", 0.0)};
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("llm config: ") + e.what());
  }
  if (c.mode != "scripted" && c.mode != "live") throw ConfigError("llm config: mode must be scripted or live");
  if (c.budget_usd < 0) throw ConfigError("llm config: budget_usd must be >= 0");
  for (const auto& [role, route] : c.routes) {
    if (route.model_id.empty()) throw ConfigError("llm config: route " + std::string(to_string(role)) + " has no model");
    if (route.max_tokens < 1) throw ConfigError("llm config: max_tokens must be >= 1");
  }
  return c;
}

LlmConfig LlmConfig::load_file(const std::string& path) {
  try {
    return from_json(json::parse(read_file(path)));
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

const ModelRoute& LlmConfig::route(Role role) const {
  auto it = routes.find(role);
  if (it == routes.end()) throw ConfigError("no route for role " + std::string(to_string(role)));
  return it->second;
}

void UsageLedger::add(UsageEntry entry) {
  total_cost_ += entry.cost_usd;
  prompt_tokens_ += entry.prompt_tokens;
  completion_tokens_ += entry.completion_tokens;
  entries_.push_back(std::move(entry));
}

json UsageLedger::to_json() const {
  json calls = json::array();
  for (const auto& e : entries_) {
    calls.push_back({{"role", to_string(e.role)},
                     {"model", e.model_id},
                     {"prompt_tokens", e.prompt_tokens},
                     {"completion_tokens", e.completion_tokens},
                     {"cost_usd", e.cost_usd}});
  }
  return {{"calls", calls},
          {"total_prompt_tokens", prompt_tokens_},
          {"total_completion_tokens", completion_tokens_},
          {"total_cost_usd", total_cost_}};
}

ScriptedBackend::ScriptedBackend(std::vector<Record> records) : records_(std::move(records)) {}

ScriptedBackend ScriptedBackend::from_json(const json& doc) {
  std::vector<Record> records;
  const json& list = doc.is_array() ? doc : doc.at("records");
  size_t i = 0;
  for (const auto& r : list) {
    const std::string where = "script record " + std::to_string(i++);
    reject_unknown(r, {"role", "guard", "response", "repeat", "note"}, where);
    Record rec;
    auto role = parse_role(r.value("role", ""));
    if (!role) throw ConfigError(where + ": unknown role");
    rec.role = *role;
    if (r.contains("guard")) {
      if (r["guard"].is_string()) {
        rec.guards.push_back(r["guard"].get<std::string>());
      } else {
        rec.guards = r["guard"].get<std::vector<std::string>>();
      }
    }
    if (!r.contains("response")) throw ConfigError(where + ": missing response");
    if (r["response"].is_array()) {
      rec.response = text::join(r["response"].get<std::vector<std::string>>(), "\n");
    } else {
      rec.response = r["response"].get<std::string>();
    }
    rec.repeat = r.value("repeat", false);
    records.push_back(std::move(rec));
  }
  return ScriptedBackend(std::move(records));
}

ScriptedBackend ScriptedBackend::load(const std::string& name_or_path) {
  std::string text;
  if (auto bundled = assets::find(name_or_path)) {
    text = std::string(*bundled);
  } else if (auto scripts = assets::find("fixtures/scripts/" + name_or_path + ".json")) {
    text = std::string(*scripts);
  } else {
    text = read_file(name_or_path);
  }
  try {
    return from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw ConfigError(name_or_path + ": " + e.what());
  }
}

Completion ScriptedBackend::complete(const ModelRoute& route, const std::vector<Message>& messages) {
  const std::string prompt = render_prompt(messages);
  for (auto& r : records_) {
    if (r.role != route.role || r.consumed) continue;
    bool match = std::all_of(r.guards.begin(), r.guards.end(),
                             [&](const std::string& g) { return prompt.find(g) != std::string::npos; });
    if (!match) continue;
    if (!r.repeat) r.consumed = true;
    return {r.response, std::nullopt, std::nullopt};
  }
  std::string head = prompt.substr(0, 400);
  throw ScriptExhausted("no scripted response left for role " + std::string(to_string(route.role)) +
                        "; prompt begins: " + head);
}

std::size_t ScriptedBackend::remaining() const {
  return static_cast<std::size_t>(
      std::count_if(records_.begin(), records_.end(), [](const Record& r) { return !r.consumed && !r.repeat; }));
}

std::unique_ptr<Backend> make_backend(const LlmConfig& config) {
  if (config.mode == "live") {
    if (config.endpoint.empty()) throw ConfigError("live mode requires an endpoint");
    std::string key;
    if (!config.api_key_env.empty()) {
      const char* v = std::getenv(config.api_key_env.c_str());
      if (!v || !*v) throw ConfigError("environment variable " + config.api_key_env + " is not set");
      key = v;
    }
    return std::make_unique<HttpBackend>(config.endpoint, key, config.timeout_seconds);
  }
  if (config.script_path.empty()) throw ConfigError("scripted mode requires a script");
  return std::make_unique<ScriptedBackend>(ScriptedBackend::load(config.script_path));
}

std::int64_t estimate_tokens(std::string_view text) {
  return static_cast<std::int64_t>((text.size() + 3) / 4);
}

double cost_of(const LlmConfig& config, const std::string& model_id, std::int64_t in, std::int64_t out) {
  auto it = config.prices.find(model_id);
  if (it == config.prices.end()) return 0.0;
  return (static_cast<double>(in) * it->second.usd_per_mtok_in + static_cast<double>(out) * it->second.usd_per_mtok_out) /
         1e6;
}

std::string render_prompt(const std::vector<Message>& messages) {
  std::string out;
  for (const auto& m : messages) {
    if (!out.empty()) out += "\n\n";
    out += "[" + m.speaker + "]\n" + m.text;
  }
  return out;
}

Gateway::Gateway(LlmConfig config, std::unique_ptr<Backend> backend, data::History* history)
    : config_(std::move(config)), backend_(std::move(backend)), history_(history) {}

std::string Gateway::complete(Role role, const std::vector<Message>& messages, const CallSite& site) {
  const ModelRoute& route = config_.route(role);
  const std::string prompt = render_prompt(messages);
  const std::int64_t prompt_estimate = estimate_tokens(prompt);
  const double worst = cost_of(config_, route.model_id, prompt_estimate, route.max_tokens);
  if (ledger_.total_cost() + worst > config_.budget_usd || config_.budget_usd <= 0) {
    throw BudgetExhausted("budget of $" + text::format_double(config_.budget_usd) + " would be exceeded (spent $" +
                          text::format_double(ledger_.total_cost()) + ")");
  }
  const std::string actor = site.actor.empty() ? std::string(to_string(role)) : site.actor;
  if (history_) {
    data::InteractionRecord r;
    r.task_id = site.task_id;
    r.actor = actor;
    r.payload = prompt;
    r.payload_kind = data::PayloadKind::prompt;
    r.subtask = site.subtask;
    r.timestamp = site.timestamp;
    history_->append(r);
  }
  Completion c = backend_->complete(route, messages);
  UsageEntry usage{role, route.model_id, c.prompt_tokens.value_or(prompt_estimate),
                   c.completion_tokens.value_or(estimate_tokens(c.text)), 0};
  usage.cost_usd = cost_of(config_, route.model_id, usage.prompt_tokens, usage.completion_tokens);
  ledger_.add(usage);
  if (history_) {
    data::InteractionRecord r;
    r.task_id = site.task_id;
    r.actor = actor;
    r.payload = c.text;
    r.payload_kind = data::PayloadKind::completion;
    r.subtask = site.subtask;
    r.timestamp = site.timestamp;
    history_->append(r);
  }
  return c.text;
}

}  // namespace skillforge::llm
