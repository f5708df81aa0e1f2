#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "skillforge/data/history.hpp"
#include "skillforge/data/skills.hpp"
#include "skillforge/data/task.hpp"
#include "skillforge/llm/gateway.hpp"
#include "skillforge/sim/environment.hpp"

namespace skillforge::curator {

enum class Verdict { validated, rejected, deferred };
std::string_view to_string(Verdict verdict);

struct Validation {
  Verdict verdict = Verdict::deferred;
  std::string reason;
};

struct Consolidation {
  int stored = 0;  // conflicted entries are stored too
  int merged = 0;
  int conflicted = 0;

  bool operator==(const Consolidation&) const = default;
};

struct CuratorConfig {
  int reasks = 1;
};

// Parses "SKILL" blocks (or a lone "NONE"). Returns the issues found.
std::vector<std::string> parse_skills(const std::string& completion, std::vector<data::SkillEntry>& out);

// Mechanical cross-check of a Configuration against the cluster. nullopt when the subject
// has no field mapping; otherwise the mismatch reason, empty on agreement.
std::optional<std::string> check_configuration(const data::SkillEntry& entry, const sim::ClusterState& state);

// One line per record: "#<id> <actor> <payload kind>[ exit N]: <payload>".
std::string format_trajectory(const std::vector<data::InteractionRecord>& trajectory);

struct CurationResult {
  Consolidation counts;
  std::vector<data::SkillEntry> accepted;
  std::vector<std::pair<data::SkillEntry, std::string>> rejected;
};

class Curator {
 public:
  Curator(llm::Gateway& gateway, data::History& history, std::vector<std::string> agents, CuratorConfig config = {});

  // Unvalidated entries. Command bodies that are not verbatim trajectory commands are
  // dropped here. Zero entries on an empty trajectory or after the re-ask fails.
  std::vector<data::SkillEntry> extract(const data::Task& task, const std::string& solution,
                                        const std::vector<data::InteractionRecord>& trajectory);

  // Commands run on a clone of `env`, never on `env` itself. A null environment defers.
  Validation validate(data::SkillEntry& entry, const sim::Environment* env,
                      const std::vector<data::InteractionRecord>& trajectory);

  Consolidation consolidate(const std::vector<data::SkillEntry>& entries, data::SkillLibrary& library);

  // extract, validate each entry, consolidate the validated ones.
  CurationResult curate(const data::Task& task, const std::string& solution,
                        const std::vector<data::InteractionRecord>& trajectory, const sim::Environment* env,
                        data::SkillLibrary& library, int round, int trial);

 private:
  bool judge(const std::string& mode, const std::string& prompt, const std::string& task_id,
             const std::string& accept, std::int64_t now);

  llm::Gateway& gateway_;
  data::History& history_;
  std::vector<std::string> agents_;
  CuratorConfig config_;
};

}  // namespace skillforge::curator
