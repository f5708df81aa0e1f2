#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace skillforge::data {

enum class SkillKind { command, reflection, configuration };

// "Command", "Reflection", "Configuration".
std::string_view to_string(SkillKind kind);
std::optional<SkillKind> parse_skill_kind(std::string_view text);  // case-insensitive

struct SkillEntry {
  std::string id;  // assigned by the library when empty
  SkillKind kind = SkillKind::command;
  std::string body;
  std::string description;
  std::string source_task;
  bool validated = false;
  int created_round = 0;
  int trial = 0;
  std::optional<std::string> conflict_group;
  // Configuration facts: the attribute the entry talks about and the value it claims.
  std::string subject;
  std::string value;
  // Observation command used to cross-check a Configuration when no field mapping exists.
  std::string check;
  // Reflection grounding: ids of the trajectory records the claims rest on.
  std::vector<std::uint64_t> citations;

  bool operator==(const SkillEntry&) const = default;
};

nlohmann::json to_json(const SkillEntry& entry);
SkillEntry skill_from_json(const nlohmann::json& doc);

enum class StoreOutcome { stored, merged, conflicted };
std::string_view to_string(StoreOutcome outcome);

class SkillLibrary {
 public:
  // Throws InvalidArgument for an unvalidated entry.
  StoreOutcome store(SkillEntry entry);

  const std::vector<SkillEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const SkillEntry* find(std::string_view id) const;

  // Ranked by the number of distinct query tokens found in body + description, then kind
  // (Command, Configuration, Reflection), then id. Throws InvalidArgument when k < 1.
  std::vector<SkillEntry> retrieve(std::string_view query, std::size_t k) const;

  nlohmann::json to_json() const;
  static SkillLibrary from_json(const nlohmann::json& doc);
  std::string export_markdown() const;

  bool operator==(const SkillLibrary&) const = default;

 private:
  std::vector<SkillEntry> entries_;
  int next_id_ = 1;
  int next_group_ = 1;
};

// Token-overlap score used by retrieve(); exposed for tests.
std::size_t overlap_score(std::string_view query, const SkillEntry& entry);

}  // namespace skillforge::data
