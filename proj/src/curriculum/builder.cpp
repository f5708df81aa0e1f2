#include "skillforge/curriculum/builder.hpp"

#include <algorithm>
#include <map>

#include "skillforge/core/prompts.hpp"
#include "skillforge/core/text.hpp"

namespace skillforge::curriculum {
namespace {

std::string summary_line(const TaskSummary& s) {
  const auto& t = s.task;
  std::string out = "- task " + t.id + " [round " + std::to_string(t.round) + ", stage " + std::to_string(t.stage) +
                    ", " + std::string(data::to_string(t.kind)) + ", difficulty " + std::to_string(t.difficulty) +
                    "] " + std::string(data::to_string(t.status)) + ": " + t.description + "\n";
  if (!s.last_feedback.empty()) out += "  last feedback: " + s.last_feedback + "\n";
  return out;
}

std::optional<std::pair<std::string, std::string>> key_value(std::string_view line) {
  auto colon = line.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  std::string key = text::to_lower(text::trim(line.substr(0, colon)));
  if (key != "description" && key != "kind" && key != "stage" && key != "difficulty") return std::nullopt;
  return std::make_pair(key, std::string(text::trim(line.substr(colon + 1))));
}

}  // namespace

std::vector<TaskSummary> summarize(const std::vector<data::Task>& tasks, const data::History& history) {
  std::map<std::string, std::string> feedback;
  for (const auto& r : history.records()) {
    if (r.payload_kind == data::PayloadKind::feedback) feedback[r.task_id] = r.payload;
  }
  std::vector<TaskSummary> out;
  for (const auto& t : tasks) {
    auto it = feedback.find(t.id);
    out.push_back({t, it == feedback.end() ? "" : it->second});
  }
  return out;
}

std::string build_context(const data::RunningStateSnapshot& snapshot, const std::vector<TaskSummary>& history,
                          const std::vector<std::string>& extras, std::size_t max_chars) {
  const std::string state = "## System running state\n" + snapshot.to_text();
  std::string tail;
  if (!extras.empty()) {
    tail = "\n## Other resources\n";
    for (const auto& e : extras) tail += e + (e.ends_with('\n') ? "" : "\n");
  }
  std::vector<std::string> lines;
  for (const auto& s : history) lines.push_back(summary_line(s));

  std::size_t first = 0;
  auto assemble = [&] {
    std::string h = "\n## Interaction history\n";
    if (history.empty()) {
      h += "no prior interactions\n";
    } else {
      if (first > 0) h += "- (" + std::to_string(first) + " earlier tasks omitted)\n";
      for (std::size_t i = first; i < lines.size(); ++i) h += lines[i];
    }
    return state + h + tail;
  };
  std::string out = assemble();
  while (out.size() > max_chars && first < lines.size()) {
    ++first;
    out = assemble();
  }
  return out;
}

ParsedRound parse_round(const std::string& completion, int round, int tasks_per_round, bool observation_only) {
  ParsedRound parsed;
  std::vector<std::map<std::string, std::string>> blocks;
  std::string* last_key_value = nullptr;
  for (const auto& raw : text::split_lines(completion)) {
    std::string_view line = text::trim(raw);
    if (line.starts_with("###")) {
      blocks.emplace_back();
      last_key_value = nullptr;
      continue;
    }
    if (line.empty() || blocks.empty()) continue;
    if (auto kv = key_value(line)) {
      auto& slot = blocks.back()[kv->first];
      slot = kv->second;
      last_key_value = kv->first == "description" ? &slot : nullptr;
    } else if (last_key_value) {
      *last_key_value += " " + std::string(line);
    }
  }
  if (blocks.empty()) {
    parsed.issues.push_back("no \"### Task\" blocks found");
    return parsed;
  }
  if (static_cast<int>(blocks.size()) != tasks_per_round) {
    parsed.issues.push_back("expected " + std::to_string(tasks_per_round) + " tasks, got " +
                            std::to_string(blocks.size()));
  }
  int index = 0;
  for (auto& b : blocks) {
    ++index;
    const std::string where = "task " + std::to_string(index);
    data::Task t;
    t.id = "r" + std::to_string(round) + "-t" + std::to_string(index);
    t.round = round;
    t.description = b["description"];
    if (t.description.empty()) parsed.issues.push_back(where + ": empty description");
    auto kind = data::parse_task_kind(text::to_lower(b["kind"]));
    if (!kind) {
      parsed.issues.push_back(where + ": kind must be observation or action");
    } else {
      t.kind = *kind;
      if (observation_only && t.kind == data::TaskKind::action) {
        parsed.issues.push_back(where + ": action tasks are not allowed in observation-only mode");
      }
    }
    auto stage = text::parse_int(b["stage"]);
    if (!stage || *stage < 1 || *stage > 4) {
      parsed.issues.push_back(where + ": stage must be an integer from 1 to 4");
    } else {
      t.stage = static_cast<int>(*stage);
    }
    auto difficulty = text::parse_int(b["difficulty"]);
    if (!difficulty || *difficulty < 1) {
      parsed.issues.push_back(where + ": difficulty must be an integer >= 1");
    } else {
      t.difficulty = static_cast<int>(*difficulty);
    }
    parsed.tasks.push_back(std::move(t));
  }
  return parsed;
}

ProgressionReport difficulty_progression_check(const std::vector<data::Task>& prev_round,
                                               const std::vector<data::Task>& new_round) {
  std::map<int, int> hardest_success;
  std::map<int, int> easiest_failure;
  for (const auto& t : prev_round) {
    if (t.status == data::TaskStatus::succeeded) {
      auto [it, fresh] = hardest_success.emplace(t.stage, t.difficulty);
      if (!fresh) it->second = std::max(it->second, t.difficulty);
    } else if (t.status == data::TaskStatus::failed) {
      auto [it, fresh] = easiest_failure.emplace(t.stage, t.difficulty);
      if (!fresh) it->second = std::min(it->second, t.difficulty);
    }
  }
  ProgressionReport report;
  for (const auto& t : new_round) {
    if (auto f = easiest_failure.find(t.stage); f != easiest_failure.end()) {
      if (t.difficulty > f->second) {
        report.violations.push_back(t.id + ": stage " + std::to_string(t.stage) + " failed at difficulty " +
                                    std::to_string(f->second) + ", so difficulty " + std::to_string(t.difficulty) +
                                    " is too hard; offer an easier or alternative task");
      }
      continue;
    }
    if (auto s = hardest_success.find(t.stage); s != hardest_success.end() && t.difficulty < s->second) {
      report.violations.push_back(t.id + ": stage " + std::to_string(t.stage) + " already succeeded at difficulty " +
                                  std::to_string(s->second) + ", so difficulty " + std::to_string(t.difficulty) +
                                  " adds no challenge");
    }
  }
  return report;
}

CurriculumBuilder::CurriculumBuilder(llm::Gateway& gateway, data::History& history, BuilderConfig config)
    : gateway_(gateway), history_(history), config_(config) {}

std::vector<data::Task> CurriculumBuilder::generate_round(const std::string& context, int round_no,
                                                          const std::vector<data::Task>& prev_round,
                                                          std::int64_t now) {
  if (config_.tasks_per_round < 1) throw InvalidArgument("tasks_per_round must be >= 1");
  const std::string count = std::to_string(config_.tasks_per_round);
  std::vector<llm::Message> messages{
      {"system", prompts::render("curriculum_system",
                                 {{"mode_rule", config_.observation_only
                                                    ? "- This deployment is observation-only: propose observation "
                                                      "tasks exclusively."
                                                    : "- Action tasks are allowed in this (canary) deployment."},
                                  {"stage_directive", prompts::render("observation_stages")},
                                  {"count", count}})},
      {"user", prompts::render("curriculum_round",
                               {{"round", std::to_string(round_no)}, {"count", count}, {"context", context}})}};
  const llm::CallSite site{"round-" + std::to_string(round_no), "curriculum", "", now};

  int reasks_left = config_.reasks;
  bool progression_retry_used = false;
  while (true) {
    const std::string completion = gateway_.complete(llm::Role::curriculum, messages, site);
    ParsedRound parsed = parse_round(completion, round_no, config_.tasks_per_round, config_.observation_only);
    std::vector<std::string> issues = parsed.issues;
    bool progression_issue = false;
    if (issues.empty()) {
      auto progression = difficulty_progression_check(prev_round, parsed.tasks);
      if (!progression.ok()) {
        history_.log("progression_violation", {{"round", round_no}, {"violations", progression.violations}});
        if (progression_retry_used) return parsed.tasks;
        progression_retry_used = true;
        progression_issue = true;
        issues = progression.violations;
      }
    }
    if (issues.empty()) return parsed.tasks;
    if (!progression_issue) {
      history_.log("round_rejected", {{"round", round_no}, {"issues", issues}});
      if (reasks_left-- <= 0) {
        throw RoundGenerationFailed("round " + std::to_string(round_no) + ": " + text::join(issues, "; "));
      }
    }
    messages.push_back({"assistant", completion});
    messages.push_back({"user", "ROUND " + std::to_string(round_no) + "\nYour previous answer was rejected:\n- " +
                                    text::join(issues, "\n- ") + "\nReply again with exactly " + count +
                                    " task blocks."});
  }
}

}  // namespace skillforge::curriculum
