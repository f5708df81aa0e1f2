#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace skillforge::data {

inline constexpr int kHistorySchema = 1;

enum class PayloadKind { prompt, completion, command, execution_result, feedback, report };
enum class FeedbackKind { environment, peer, hierarchical };

std::string_view to_string(PayloadKind kind);
std::string_view to_string(FeedbackKind kind);
std::optional<PayloadKind> parse_payload_kind(std::string_view text);
std::optional<FeedbackKind> parse_feedback_kind(std::string_view text);

struct InteractionRecord {
  std::uint64_t id = 0;  // assigned on append, starting at 1
  std::string task_id;
  std::string actor;  // "manager", an agent name, "environment", or an LLM role
  std::string payload;
  PayloadKind payload_kind = PayloadKind::prompt;
  std::optional<FeedbackKind> feedback_kind;
  std::string target;   // addressee: subtask id for feedback, "manager" for reports
  std::string subtask;  // subtask the record belongs to, if any
  std::optional<int> exit_code;  // execution_result only
  std::int64_t timestamp = 0;    // sim time

  bool operator==(const InteractionRecord&) const = default;
};

nlohmann::json to_json(const InteractionRecord& record);
InteractionRecord record_from_json(const nlohmann::json& doc);

// Append-only trial log. Besides interaction records it carries the events needed to
// rebuild the environment and the curator's inputs on replay: ticks, mutations, task
// status changes and curation hand-offs. Serialized as one JSON object per line, each
// tagged with the schema version "v" and an event "type".
class History {
 public:
  // Throws ContractViolation if `record` breaks the feedback_kind/payload_kind rule.
  const InteractionRecord& append(InteractionRecord record);
  void log(std::string type, nlohmann::json body);

  const std::vector<InteractionRecord>& records() const { return records_; }
  std::vector<InteractionRecord> records_for(std::string_view task_id) const;
  const InteractionRecord* find(std::uint64_t id) const;
  // Every event in order, records included, each with "type" set.
  const std::vector<nlohmann::json>& events() const { return events_; }

  std::string serialize() const;
  // Throws LoadError on malformed lines or an unknown schema version.
  static History parse(std::string_view text);

 private:
  std::vector<InteractionRecord> records_;
  std::vector<nlohmann::json> events_;
};

}  // namespace skillforge::data
