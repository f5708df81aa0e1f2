#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "skillforge/data/history.hpp"
#include "skillforge/data/skills.hpp"
#include "skillforge/data/task.hpp"
#include "skillforge/llm/gateway.hpp"
#include "skillforge/shell/gateway.hpp"
#include "skillforge/sim/environment.hpp"

namespace skillforge::planner {

class PlanningFailed : public Error {
 public:
  using Error::Error;
};

// An observation task changed the cluster state.
class ObservationViolation : public Error {
 public:
  using Error::Error;
};

enum class SubtaskStatus { pending, succeeded, failed };
std::string_view to_string(SubtaskStatus status);

struct Subtask {
  std::string id;  // "S1", "S2", ... within one plan revision
  std::string assignee;
  std::string description;
  std::optional<std::string> depends_on;
  // What this subtask expects from its dependency's result: "number", "nonempty" or
  // "regex:<pattern>". Empty means no expectation.
  std::string input_format;
  int attempts = 0;
  std::optional<std::string> result;
  SubtaskStatus status = SubtaskStatus::pending;
};

enum class PlanStatus { active, complete, failed };

struct Plan {
  std::string task_id;
  std::vector<Subtask> subtasks;
  PlanStatus status = PlanStatus::active;
  int revision = 1;

  Subtask* find(std::string_view id);
  bool all_succeeded() const;
  std::size_t succeeded_count() const;
};

struct Feedback {
  data::FeedbackKind kind = data::FeedbackKind::environment;
  std::string source;
  std::string target_subtask;
  std::string content;
};

struct PlannerConfig {
  int attempt_budget = 4;
  int replan_budget = 2;
  int plan_reasks = 1;
  std::size_t skills_k = 8;
  // Ask the downstream agent's model to judge handoffs instead of the declared format check.
  bool model_judged_handoff = false;
};

// Parses manager "SUBTASK N" blocks. Returns the issues found (empty when usable).
std::vector<std::string> parse_plan(const std::string& completion, const std::vector<std::string>& agents,
                                    std::vector<Subtask>& out);

// Mechanical check of a result against a declared input format.
bool matches_format(const std::string& format, const std::string& value);

// Text of the first "COMMAND:" line, or the first non-empty line when none is labelled.
std::string extract_command(const std::string& completion);

enum class Trigger { escalation, imbalance_report };
std::string_view to_string(Trigger trigger);

struct TaskOutcome {
  data::TaskStatus status = data::TaskStatus::failed;
  std::string solution;
  std::string failure_reason;
  Plan plan;
  bool violation = false;
};

// Hierarchical manager plus per-component agents. The environment is passed to every
// operation explicitly so executions can later be serialized at that boundary.
class Planner {
 public:
  Planner(llm::Gateway& gateway, data::History& history, std::vector<std::string> agents, PlannerConfig config);

  Plan decompose(const data::Task& task, const std::vector<data::SkillEntry>& skills, const sim::Environment& env);

  // Runs the agent loop for one subtask. Returns true when the agent reported a result.
  bool execute_subtask(Plan& plan, std::size_t index, const data::Task& task,
                       const std::vector<data::SkillEntry>& skills, sim::Environment& env, bool read_only,
                       const std::vector<Feedback>& extra_feedback = {});

  // Validates plan.subtasks[from].result against plan.subtasks[to].input_format. On a
  // mismatch the upstream agent gets one revision; a second mismatch returns false
  // (escalation).
  bool peer_handoff(Plan& plan, std::size_t from, std::size_t to, const data::Task& task,
                    const std::vector<data::SkillEntry>& skills, sim::Environment& env, bool read_only);

  Plan hierarchical_replan(const Plan& plan, Trigger trigger, const std::string& trigger_context,
                           const data::Task& task, const std::vector<data::SkillEntry>& skills,
                           const sim::Environment& env);

  // Throws ContractViolation unless every subtask succeeded.
  std::string assemble(Plan& plan, const data::Task& task, const sim::Environment& env);

  // The whole pipeline: decompose, execute with handoffs, re-plan on triggers, assemble.
  TaskOutcome run(const data::Task& task, const std::vector<data::SkillEntry>& skills, sim::Environment& env,
                  bool read_only);

  const std::vector<std::string>& agents() const { return agents_; }

 private:
  void record_feedback(const data::Task& task, const Feedback& fb, std::int64_t now);
  Plan request_plan(std::vector<llm::Message> messages, const data::Task& task, const llm::CallSite& site);

  llm::Gateway& gateway_;
  data::History& history_;
  std::vector<std::string> agents_;  // component agents; "manager" is implicit
  PlannerConfig config_;
  std::string last_plan_text_;
};

std::string format_skills(const std::vector<data::SkillEntry>& skills);

}  // namespace skillforge::planner
