#include "skillforge/data/history.hpp"

#include "skillforge/core/error.hpp"
#include "skillforge/core/text.hpp"

namespace skillforge::data {

std::string_view to_string(PayloadKind kind) {
  switch (kind) {
    case PayloadKind::prompt: return "prompt";
    case PayloadKind::completion: return "completion";
    case PayloadKind::command: return "command";
    case PayloadKind::execution_result: return "execution_result";
    case PayloadKind::feedback: return "feedback";
    case PayloadKind::report: return "report";
  }
  return "prompt";
}

std::string_view to_string(FeedbackKind kind) {
  switch (kind) {
    case FeedbackKind::environment: return "environment";
    case FeedbackKind::peer: return "peer";
    case FeedbackKind::hierarchical: return "hierarchical";
  }
  return "environment";
}

std::optional<PayloadKind> parse_payload_kind(std::string_view text) {
  for (auto k : {PayloadKind::prompt, PayloadKind::completion, PayloadKind::command, PayloadKind::execution_result,
                 PayloadKind::feedback, PayloadKind::report}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

std::optional<FeedbackKind> parse_feedback_kind(std::string_view text) {
  for (auto k : {FeedbackKind::environment, FeedbackKind::peer, FeedbackKind::hierarchical}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

nlohmann::json to_json(const InteractionRecord& r) {
  nlohmann::json doc{{"id", r.id},
                     {"task_id", r.task_id},
                     {"actor", r.actor},
                     {"payload", r.payload},
                     {"payload_kind", to_string(r.payload_kind)},
                     {"timestamp", r.timestamp}};
  if (r.feedback_kind) doc["feedback_kind"] = to_string(*r.feedback_kind);
  if (!r.target.empty()) doc["target"] = r.target;
  if (!r.subtask.empty()) doc["subtask"] = r.subtask;
  if (r.exit_code) doc["exit_code"] = *r.exit_code;
  return doc;
}

InteractionRecord record_from_json(const nlohmann::json& doc) {
  InteractionRecord r;
  r.id = doc.at("id").get<std::uint64_t>();
  r.task_id = doc.at("task_id").get<std::string>();
  r.actor = doc.at("actor").get<std::string>();
  r.payload = doc.at("payload").get<std::string>();
  auto kind = parse_payload_kind(doc.at("payload_kind").get<std::string>());
  if (!kind) throw InvalidArgument("record " + std::to_string(r.id) + ": unknown payload_kind");
  r.payload_kind = *kind;
  if (doc.contains("feedback_kind")) {
    auto fk = parse_feedback_kind(doc.at("feedback_kind").get<std::string>());
    if (!fk) throw InvalidArgument("record " + std::to_string(r.id) + ": unknown feedback_kind");
    r.feedback_kind = fk;
  }
  r.target = doc.value("target", "");
  r.subtask = doc.value("subtask", "");
  if (doc.contains("exit_code")) r.exit_code = doc.at("exit_code").get<int>();
  r.timestamp = doc.at("timestamp").get<std::int64_t>();
  return r;
}

const InteractionRecord& History::append(InteractionRecord record) {
  if (record.feedback_kind.has_value() != (record.payload_kind == PayloadKind::feedback)) {
    throw ContractViolation("feedback_kind must be present exactly when payload_kind is feedback");
  }
  record.id = records_.size() + 1;
  records_.push_back(std::move(record));
  auto doc = to_json(records_.back());
  doc["type"] = "record";
  events_.push_back(std::move(doc));
  return records_.back();
}

void History::log(std::string type, nlohmann::json body) {
  if (!body.is_object()) body = nlohmann::json{{"value", std::move(body)}};
  body["type"] = std::move(type);
  events_.push_back(std::move(body));
}

std::vector<InteractionRecord> History::records_for(std::string_view task_id) const {
  std::vector<InteractionRecord> out;
  for (const auto& r : records_) {
    if (r.task_id == task_id) out.push_back(r);
  }
  return out;
}

const InteractionRecord* History::find(std::uint64_t id) const {
  if (id == 0 || id > records_.size()) return nullptr;
  return &records_[id - 1];
}

std::string History::serialize() const {
  std::string out;
  for (const auto& e : events_) {
    auto line = e;
    line["v"] = kHistorySchema;
    out += line.dump() + "\n";
  }
  return out;
}

History History::parse(std::string_view text) {
  History h;
  size_t line_no = 0;
  for (const auto& line : text::split_lines(text)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const std::string where = "history line " + std::to_string(line_no);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw LoadError(where, e.what());
    }
    if (!doc.is_object() || doc.value("v", 0) != kHistorySchema) {
      throw LoadError(where, "unsupported schema version");
    }
    doc.erase("v");
    const std::string type = doc.value("type", "");
    if (type == "record") {
      InteractionRecord r;
      try {
        r = record_from_json(doc);
      } catch (const std::exception& e) {
        throw LoadError(where, e.what());
      }
      if (r.id != h.records_.size() + 1) throw LoadError(where, "record ids are not contiguous");
      h.append(r);
    } else if (!type.empty()) {
      doc.erase("type");
      h.log(type, std::move(doc));
    } else {
      throw LoadError(where, "missing event type");
    }
  }
  return h;
}

}  // namespace skillforge::data
