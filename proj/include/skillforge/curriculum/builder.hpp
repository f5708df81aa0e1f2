#pragma once

#include <optional>
#include <string>
#include <vector>

#include "skillforge/data/history.hpp"
#include "skillforge/data/snapshot.hpp"
#include "skillforge/data/task.hpp"
#include "skillforge/llm/gateway.hpp"

namespace skillforge::curriculum {

class RoundGenerationFailed : public Error {
 public:
  using Error::Error;
};

struct TaskSummary {
  data::Task task;
  std::string last_feedback;  // verbatim payload of the task's last feedback record
};

// Pairs finished tasks with the last feedback recorded for each.
std::vector<TaskSummary> summarize(const std::vector<data::Task>& tasks, const data::History& history);

inline constexpr std::size_t kDefaultContextChars = 8000;

// State section, then one summary per task (oldest first), then extra resources. When the
// text would exceed max_chars the oldest summaries are dropped first.
std::string build_context(const data::RunningStateSnapshot& snapshot, const std::vector<TaskSummary>& history,
                          const std::vector<std::string>& extras = {},
                          std::size_t max_chars = kDefaultContextChars);

struct ParsedRound {
  std::vector<data::Task> tasks;
  std::vector<std::string> issues;  // empty when the completion is usable
};

// Reads "### Task N" blocks with description/kind/stage/difficulty lines.
ParsedRound parse_round(const std::string& completion, int round, int tasks_per_round, bool observation_only);

struct ProgressionReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Per theme (stage tag): after a failure the new round must not go harder than the easiest
// failed difficulty; otherwise after a success it must not go easier than the hardest
// succeeded difficulty. Themes absent from the previous round are unconstrained.
ProgressionReport difficulty_progression_check(const std::vector<data::Task>& prev_round,
                                               const std::vector<data::Task>& new_round);

struct BuilderConfig {
  int tasks_per_round = 3;
  bool observation_only = false;
  int reasks = 2;
};

class CurriculumBuilder {
 public:
  CurriculumBuilder(llm::Gateway& gateway, data::History& history, BuilderConfig config);

  // Throws RoundGenerationFailed when no usable round is obtained within the re-ask limit.
  std::vector<data::Task> generate_round(const std::string& context, int round_no,
                                         const std::vector<data::Task>& prev_round, std::int64_t now);

 private:
  llm::Gateway& gateway_;
  data::History& history_;
  BuilderConfig config_;
};

}  // namespace skillforge::curriculum
