#include "skillforge/data/skills.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include "skillforge/core/error.hpp"
#include "skillforge/core/text.hpp"

namespace skillforge::data {
namespace {

int kind_rank(SkillKind kind) {
  switch (kind) {
    case SkillKind::command: return 0;
    case SkillKind::configuration: return 1;
    case SkillKind::reflection: return 2;
  }
  return 3;
}

std::string padded_id(const char* prefix, int n) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%04d", prefix, n);
  return buf;
}

}  // namespace

std::string_view to_string(SkillKind kind) {
  switch (kind) {
    case SkillKind::command: return "Command";
    case SkillKind::reflection: return "Reflection";
    case SkillKind::configuration: return "Configuration";
  }
  return "Command";
}

std::optional<SkillKind> parse_skill_kind(std::string_view text) {
  for (auto k : {SkillKind::command, SkillKind::reflection, SkillKind::configuration}) {
    if (text::to_lower(text) == text::to_lower(to_string(k))) return k;
  }
  return std::nullopt;
}

std::string_view to_string(StoreOutcome outcome) {
  switch (outcome) {
    case StoreOutcome::stored: return "stored";
    case StoreOutcome::merged: return "merged";
    case StoreOutcome::conflicted: return "conflicted";
  }
  return "stored";
}

nlohmann::json to_json(const SkillEntry& e) {
  nlohmann::json doc{{"id", e.id},
                     {"kind", to_string(e.kind)},
                     {"body", e.body},
                     {"description", e.description},
                     {"source_task", e.source_task},
                     {"validated", e.validated},
                     {"created_round", e.created_round},
                     {"trial", e.trial},
                     {"conflict_group", e.conflict_group ? nlohmann::json(*e.conflict_group) : nlohmann::json()},
                     {"subject", e.subject},
                     {"value", e.value},
                     {"check", e.check},
                     {"citations", e.citations}};
  return doc;
}

SkillEntry skill_from_json(const nlohmann::json& doc) {
  SkillEntry e;
  e.id = doc.value("id", "");
  auto kind = parse_skill_kind(doc.at("kind").get<std::string>());
  if (!kind) throw InvalidArgument("unknown skill kind \"" + doc.at("kind").get<std::string>() + "\"");
  e.kind = *kind;
  e.body = doc.at("body").get<std::string>();
  e.description = doc.value("description", "");
  e.source_task = doc.value("source_task", "");
  e.validated = doc.value("validated", false);
  e.created_round = doc.value("created_round", 0);
  e.trial = doc.value("trial", 0);
  if (doc.contains("conflict_group") && !doc.at("conflict_group").is_null()) {
    e.conflict_group = doc.at("conflict_group").get<std::string>();
  }
  e.subject = doc.value("subject", "");
  e.value = doc.value("value", "");
  e.check = doc.value("check", "");
  if (doc.contains("citations")) e.citations = doc.at("citations").get<std::vector<std::uint64_t>>();
  return e;
}

StoreOutcome SkillLibrary::store(SkillEntry entry) {
  if (!entry.validated) throw InvalidArgument("only validated skills may enter the library");
  for (const auto& existing : entries_) {
    if (existing.kind == entry.kind && existing.body == entry.body) return StoreOutcome::merged;
  }
  SkillEntry* rival = nullptr;
  if (entry.kind == SkillKind::configuration && !entry.subject.empty()) {
    for (auto& existing : entries_) {
      if (existing.kind != SkillKind::configuration || existing.subject != entry.subject) continue;
      if (existing.value == entry.value) return StoreOutcome::merged;
      rival = &existing;
    }
  }
  if (entry.id.empty()) entry.id = padded_id("skill-", next_id_);
  ++next_id_;
  StoreOutcome outcome = StoreOutcome::stored;
  if (rival) {
    if (!rival->conflict_group) rival->conflict_group = padded_id("conflict-", next_group_++);
    entry.conflict_group = rival->conflict_group;
    outcome = StoreOutcome::conflicted;
  }
  entries_.push_back(std::move(entry));
  return outcome;
}

const SkillEntry* SkillLibrary::find(std::string_view id) const {
  for (const auto& e : entries_) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

std::size_t overlap_score(std::string_view query, const SkillEntry& entry) {
  auto q = text::tokenize_words(query);
  std::set<std::string> wanted(q.begin(), q.end());
  auto b = text::tokenize_words(entry.body + " " + entry.description);
  std::set<std::string> have(b.begin(), b.end());
  std::size_t score = 0;
  for (const auto& w : wanted) score += have.count(w);
  return score;
}

std::vector<SkillEntry> SkillLibrary::retrieve(std::string_view query, std::size_t k) const {
  if (k < 1) throw InvalidArgument("retrieve requires k >= 1");
  std::vector<std::pair<std::size_t, const SkillEntry*>> scored;
  for (const auto& e : entries_) {
    if (e.validated) scored.emplace_back(overlap_score(query, e), &e);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    if (a.second->kind != b.second->kind) return kind_rank(a.second->kind) < kind_rank(b.second->kind);
    return a.second->id < b.second->id;
  });
  std::vector<SkillEntry> out;
  for (std::size_t i = 0; i < scored.size() && i < k; ++i) out.push_back(*scored[i].second);
  return out;
}

nlohmann::json SkillLibrary::to_json() const {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : entries_) entries.push_back(data::to_json(e));
  return {{"schema", "skillforge/skills/v1"}, {"next_id", next_id_}, {"next_group", next_group_}, {"entries", entries}};
}

SkillLibrary SkillLibrary::from_json(const nlohmann::json& doc) {
  SkillLibrary lib;
  for (const auto& e : doc.at("entries")) lib.entries_.push_back(skill_from_json(e));
  lib.next_id_ = doc.value("next_id", static_cast<int>(lib.entries_.size()) + 1);
  lib.next_group_ = doc.value("next_group", 1);
  return lib;
}

std::string SkillLibrary::export_markdown() const {
  std::string out = "# Experience about Monitoring Kubernetes Components\n## Command\n";
  std::map<std::string, int> ordinal;  // entry id -> "Kind N" position
  auto section = [&](SkillKind kind) {
    int n = 0;
    std::string lines;
    for (const auto& e : entries_) {
      if (e.kind != kind) continue;
      ordinal[e.id] = ++n;
      lines += "- " + std::string(to_string(kind)) + " " + std::to_string(n) + ": " + e.body;
      if (!e.description.empty()) lines += " " + e.description;
      lines += "\n";
    }
    return lines.empty() ? std::string("- None\n") : lines;
  };
  out += section(SkillKind::command);
  out += "\n# Reflection\n" + section(SkillKind::reflection);
  out += "\n# Configuration\n" + section(SkillKind::configuration);
  out += "\n# Conflicted Experience Requiring Resolution\n";
  std::map<std::string, std::vector<const SkillEntry*>> groups;
  for (const auto& e : entries_) {
    if (e.conflict_group) groups[*e.conflict_group].push_back(&e);
  }
  if (groups.empty()) return out + "- None\n";
  for (const auto& [group, members] : groups) {
    std::string line = "- " + group + ":";
    for (size_t i = 0; i < members.size(); ++i) {
      line += (i ? " vs " : " ") + std::string(to_string(members[i]->kind)) + " " +
              std::to_string(ordinal[members[i]->id]) + " (" + members[i]->body + ")";
    }
    out += line + "\n";
  }
  return out;
}

}  // namespace skillforge::data
