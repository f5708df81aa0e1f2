#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "skillforge/data/skills.hpp"
#include "skillforge/llm/gateway.hpp"
#include "skillforge/planner/planner.hpp"
#include "skillforge/sim/environment.hpp"

namespace skillforge::runner {

struct TrafficSetup {
  std::string deployment;
  double requests_per_sec = 0;
};

// How a finished evaluation task is judged, on top of the manager's verdict.
struct EvalCheck {
  std::string command;   // shell command run after the task
  std::string expect;    // substring its stdout must contain
  std::string promql;    // when set: the last reported number must match this query
  double tolerance = 0;  // relative
};

struct EvalTask {
  std::string id;
  std::string description;
  std::vector<std::string> setup;  // shell commands applied before the task
  std::vector<TrafficSetup> traffic;
  std::int64_t settle_seconds = 300;
  std::vector<EvalCheck> checks;
};

std::vector<EvalTask> load_suite(const std::string& name_or_path);

struct Grid {
  std::vector<std::string> columns;  // library labels, e.g. "round-1"
  std::vector<std::string> rows;     // task ids
  std::vector<std::vector<int>> successes;  // [row][column]
  int repeats = 3;

  nlohmann::json to_json() const;
  std::string to_csv() const;
  static Grid from_json(const nlohmann::json& doc);  // throws LoadError
};

struct EvalConfig {
  std::uint64_t seed = 7;
  int repeats = 3;
  std::string fixture = "sock-shop";
  std::vector<std::string> agents{"catalogue", "front-end"};
  planner::PlannerConfig planner;
};

// Builds a fresh backend for every task repeat.
using BackendFactory = std::function<std::unique_ptr<llm::Backend>()>;

struct EvalRun {
  bool success = false;
  std::string detail;
};

// One repeat of one task against a fresh fixture, curation disabled.
EvalRun run_eval_task(const EvalTask& task, const data::SkillLibrary& library, const EvalConfig& config,
                      const llm::LlmConfig& llm_config, const BackendFactory& make_backend);

Grid run_evaluation(const std::vector<std::pair<std::string, data::SkillLibrary>>& libraries,
                    const std::vector<EvalTask>& suite, const EvalConfig& config, const llm::LlmConfig& llm_config,
                    const BackendFactory& make_backend);

}  // namespace skillforge::runner
