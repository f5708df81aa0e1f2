#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skillforge/assets.hpp"
#include "skillforge/core/text.hpp"
#include "skillforge/data/history.hpp"
#include "skillforge/llm/gateway.hpp"
#include "skillforge/sim/environment.hpp"

namespace skillforge::testkit {

inline sim::Environment fixture_env(std::uint64_t seed = 7) {
  return sim::Environment(sim::load_topology_source("sock-shop", seed));
}

inline std::string asset(std::string_view name) {
  auto a = assets::find(name);
  if (!a) throw std::runtime_error("missing asset " + std::string(name));
  return std::string(*a);
}

inline std::unique_ptr<llm::ScriptedBackend> script(const nlohmann::json& records) {
  return std::make_unique<llm::ScriptedBackend>(llm::ScriptedBackend::from_json(records));
}

// Gateway over a scripted backend with the default routes and a generous budget.
inline llm::Gateway scripted_gateway(const nlohmann::json& records, data::History* history = nullptr,
                                     double budget = 10.0) {
  llm::LlmConfig cfg = llm::LlmConfig::defaults();
  cfg.budget_usd = budget;
  cfg.script_path = "inline";
  return llm::Gateway(cfg, script(records), history);
}

inline nlohmann::json rec(std::string role, std::vector<std::string> guard, std::string response,
                          bool repeat = false) {
  return {{"role", role}, {"guard", guard}, {"response", response}, {"repeat", repeat}};
}

inline std::size_t count_records(const data::History& h, data::PayloadKind kind) {
  std::size_t n = 0;
  for (const auto& r : h.records()) n += r.payload_kind == kind;
  return n;
}

inline std::size_t count_feedback(const data::History& h, data::FeedbackKind kind) {
  std::size_t n = 0;
  for (const auto& r : h.records()) n += r.feedback_kind == kind;
  return n;
}

inline std::size_t count_events(const data::History& h, std::string_view type) {
  std::size_t n = 0;
  for (const auto& e : h.events()) n += e.value("type", "") == type;
  return n;
}

// Command line of one entry of the bundled command corpus, by id ("10", "10e", ...).
inline std::string corpus_command(std::string_view id) {
  for (const auto& line : text::split_lines(asset("fixtures/reference_commands.txt"))) {
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (line.substr(0, tab) != id) continue;
    return line.substr(line.find('\t', tab + 1) + 1);
  }
  throw std::runtime_error("no corpus entry " + std::string(id));
}

}  // namespace skillforge::testkit
