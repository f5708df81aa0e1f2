#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "skillforge/data/history.hpp"
#include "skillforge/data/skills.hpp"
#include "skillforge/data/task.hpp"
#include "skillforge/llm/gateway.hpp"
#include "skillforge/runner/knowledge.hpp"

namespace skillforge::runner {

enum class Mode { full, observation_only };
std::string_view to_string(Mode mode);
std::optional<Mode> parse_mode(std::string_view text);

inline constexpr std::int64_t kWarmupSeconds = 600;
inline constexpr std::int64_t kTaskSpacingSeconds = 60;

struct TrialConfig {
  std::uint64_t seed = 7;
  int rounds = 5;
  int tasks_per_round = 3;
  Mode mode = Mode::full;
  double budget_usd = 10.0;
  double time_budget_min = 30.0;
  std::string fixture = "sock-shop";
  std::string llm = "scripted";  // "scripted" or "live"
  std::string script = "golden_trial";
  std::optional<std::string> llm_config;  // JSON file; overrides routes, prices and endpoint
  std::string out_dir;                    // empty: nothing is written
  int trial = 1;
  std::vector<std::string> agents{"catalogue", "front-end"};

  // Routes and prices from llm_config (or the defaults) with this config's mode, script
  // and budget applied.
  llm::LlmConfig llm_settings() const;
  nlohmann::json to_json() const;  // out_dir is left out so reports do not depend on it
};

struct TaskRow {
  data::Task task;
  std::string failure_reason;
  int plan_revision = 0;
  int subtasks = 0;
  int stored = 0;
  int merged = 0;
  int conflicted = 0;
  int rejected = 0;
  bool violation = false;
};

struct RoundSummary {
  int round = 0;
  int succeeded = 0;
  int failed = 0;
  std::size_t library_size = 0;
  std::vector<std::string> acquired;
};

struct TrialReport {
  TrialConfig config;
  std::vector<TaskRow> tasks;
  std::vector<RoundSummary> rounds;
  std::vector<KnowledgePoint> knowledge;
  bool truncated = false;
  std::string truncation_reason;
  std::size_t mutations = 0;
  std::size_t library_size = 0;
  nlohmann::json usage;

  nlohmann::json to_json() const;
  std::string tasks_csv() const;
  // Inverse of to_json for the fields reports are rendered from. Throws LoadError.
  static TrialReport from_json(const nlohmann::json& doc);
};

struct TrialArtifacts {
  TrialReport report;
  data::History history;
  data::SkillLibrary library;
  std::vector<data::SkillLibrary> round_libraries;  // library after each completed round
};

// The self-learning loop. `backend` overrides the one built from the config (tests use
// this to inject scripts). When config.out_dir is set every artifact is written there,
// also for a truncated trial.
TrialArtifacts run_trial(const TrialConfig& config, std::unique_ptr<llm::Backend> backend = nullptr);

// Writes history.log, skills.library, skills.md, report.json, tasks.csv, knowledge.csv,
// knowledge.svg and usage.json.
void write_trial(const TrialArtifacts& artifacts, const std::string& out_dir);

// Re-derives the skill library from a history log: re-simulates ticks and mutations and
// re-feeds the curator with the recorded curator completions. Throws ContractViolation if
// the curator's prompts diverge from the recorded ones.
data::SkillLibrary replay(const data::History& history, const TrialConfig& config);

}  // namespace skillforge::runner
