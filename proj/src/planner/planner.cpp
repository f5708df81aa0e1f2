#include "skillforge/planner/planner.hpp"

#include <algorithm>
#include <regex>

#include "skillforge/core/prompts.hpp"
#include "skillforge/core/text.hpp"
#include "skillforge/data/snapshot.hpp"

namespace skillforge::planner {
namespace {

constexpr std::string_view kPrometheus = "http://192.168.58.2:31090";
constexpr std::size_t kTranscriptOutputChars = 1500;

std::string clip(const std::string& s, std::size_t n) {
  if (s.size() <= n) return s;
  return s.substr(0, n) + "\n...(" + std::to_string(s.size() - n) + " more characters)";
}

std::string describe_plan(const Plan& plan) {
  std::string out;
  for (const auto& s : plan.subtasks) {
    out += s.id + " [" + s.assignee + ", " + std::string(to_string(s.status)) + "] " + s.description + "\n";
    if (s.result) out += "  result: " + *s.result + "\n";
  }
  return out;
}

std::string assignee_list(const std::vector<std::string>& agents) {
  std::string out;
  for (const auto& a : agents) out += a + ", ";
  return out + "manager";
}

}  // namespace

std::string_view to_string(SubtaskStatus status) {
  switch (status) {
    case SubtaskStatus::pending: return "pending";
    case SubtaskStatus::succeeded: return "succeeded";
    case SubtaskStatus::failed: return "failed";
  }
  return "pending";
}

std::string_view to_string(Trigger trigger) {
  return trigger == Trigger::escalation ? "escalation" : "imbalance-report";
}

Subtask* Plan::find(std::string_view id) {
  for (auto& s : subtasks) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

bool Plan::all_succeeded() const {
  return !subtasks.empty() && std::all_of(subtasks.begin(), subtasks.end(), [](const Subtask& s) {
    return s.status == SubtaskStatus::succeeded;
  });
}

std::size_t Plan::succeeded_count() const {
  return static_cast<std::size_t>(std::count_if(subtasks.begin(), subtasks.end(), [](const Subtask& s) {
    return s.status == SubtaskStatus::succeeded;
  }));
}

bool matches_format(const std::string& format, const std::string& value) {
  const std::string v(text::trim(value));
  if (format.empty()) return true;
  if (format == "nonempty") return !v.empty();
  if (format == "number") return text::parse_double(v).has_value();
  if (format.starts_with("regex:")) {
    try {
      return std::regex_match(v, std::regex(format.substr(6)));
    } catch (const std::regex_error&) {
      return false;
    }
  }
  return false;
}

std::vector<std::string> parse_plan(const std::string& completion, const std::vector<std::string>& agents,
                                    std::vector<Subtask>& out) {
  std::vector<std::string> issues;
  out.clear();
  for (const auto& raw : text::split_lines(completion)) {
    std::string_view line = text::trim(raw);
    if (line.empty()) continue;
    if (text::starts_with_ci(line, "SUBTASK")) {
      Subtask s;
      s.id = "S" + std::to_string(out.size() + 1);
      out.push_back(s);
      continue;
    }
    if (out.empty()) continue;
    auto colon = line.find(':');
    if (colon == std::string_view::npos) {
      if (!out.back().description.empty()) out.back().description += " " + std::string(line);
      continue;
    }
    std::string key = text::to_lower(text::trim(line.substr(0, colon)));
    std::string value(text::trim(line.substr(colon + 1)));
    Subtask& s = out.back();
    if (key == "assignee") {
      s.assignee = value;
    } else if (key == "description") {
      s.description = value;
    } else if (key == "depends_on") {
      std::string dep = value;
      if (!dep.empty() && (dep[0] == 'S' || dep[0] == 's')) dep.erase(0, 1);
      auto n = text::parse_int(dep);
      if (!value.empty() && value != "none") {
        if (!n || *n < 1 || static_cast<std::size_t>(*n) >= out.size()) {
          issues.push_back(s.id + ": depends_on must name an earlier subtask, got \"" + value + "\"");
        } else {
          s.depends_on = "S" + std::to_string(*n);
        }
      }
    } else if (key == "input_format") {
      s.input_format = value == "none" ? "" : value;
    } else if (!s.description.empty()) {
      s.description += " " + std::string(line);
    }
  }
  if (out.empty()) issues.push_back("no SUBTASK blocks found");
  if (out.size() > 4) issues.push_back("a plan may have at most 4 subtasks, got " + std::to_string(out.size()));
  for (const auto& s : out) {
    if (s.description.empty()) issues.push_back(s.id + ": empty description");
    if (s.assignee != "manager" && std::find(agents.begin(), agents.end(), s.assignee) == agents.end()) {
      issues.push_back(s.id + ": assignee \"" + s.assignee + "\" is not a registered agent (use one of " +
                       assignee_list(agents) + ")");
    }
    const auto& f = s.input_format;
    if (!f.empty()) {
      bool known = f == "number" || f == "nonempty" || f.starts_with("regex:");
      if (known && f.starts_with("regex:")) {
        try {
          std::regex re(f.substr(6));
        } catch (const std::regex_error&) {
          known = false;
        }
      }
      if (!known) issues.push_back(s.id + ": unknown input_format \"" + f + "\"");
      if (!s.depends_on) issues.push_back(s.id + ": input_format requires depends_on");
    }
  }
  return issues;
}

std::string extract_command(const std::string& completion) {
  std::string first;
  for (const auto& raw : text::split_lines(completion)) {
    std::string_view line = text::trim(raw);
    if (line.empty()) continue;
    if (text::starts_with_ci(line, "COMMAND:")) return std::string(text::trim(line.substr(8)));
    if (first.empty()) first = std::string(line);
  }
  return first;
}

std::string format_skills(const std::vector<data::SkillEntry>& skills) {
  if (skills.empty()) {
    return "Skill library: no relevant skills yet; rely on your own knowledge of these tools.\n";
  }
  std::string out = "Relevant skills from the library:\n";
  for (const auto& s : skills) {
    out += "- [" + std::string(data::to_string(s.kind)) + "] " + s.body;
    if (!s.description.empty()) out += " (" + s.description + ")";
    out += "\n";
  }
  return out;
}

Planner::Planner(llm::Gateway& gateway, data::History& history, std::vector<std::string> agents, PlannerConfig config)
    : gateway_(gateway), history_(history), agents_(std::move(agents)), config_(config) {}

void Planner::record_feedback(const data::Task& task, const Feedback& fb, std::int64_t now) {
  data::InteractionRecord r;
  r.task_id = task.id;
  r.actor = fb.source;
  r.payload = fb.content;
  r.payload_kind = data::PayloadKind::feedback;
  r.feedback_kind = fb.kind;
  r.target = fb.target_subtask;
  r.subtask = fb.target_subtask;
  r.timestamp = now;
  history_.append(std::move(r));
}

Plan Planner::request_plan(std::vector<llm::Message> messages, const data::Task& task, const llm::CallSite& site) {
  for (int asks = 0;; ++asks) {
    const std::string completion = gateway_.complete(llm::Role::planner, messages, site);
    Plan plan;
    plan.task_id = task.id;
    auto issues = parse_plan(completion, agents_, plan.subtasks);
    if (issues.empty()) {
      last_plan_text_ = completion;
      return plan;
    }
    history_.log("plan_rejected", {{"task_id", task.id}, {"issues", issues}});
    if (asks >= config_.plan_reasks) {
      throw PlanningFailed("task " + task.id + ": " + text::join(issues, "; "));
    }
    messages.push_back({"assistant", completion});
    messages.push_back({"user", "TASK " + task.id + "\nThe plan was rejected:\n- " + text::join(issues, "\n- ") +
                                    "\nAnswer again with valid SUBTASK blocks."});
  }
}

Plan Planner::decompose(const data::Task& task, const std::vector<data::SkillEntry>& skills,
                        const sim::Environment& env) {
  std::vector<llm::Message> messages{
      {"system", prompts::render("manager_decompose", {{"task_id", task.id},
                                                       {"description", task.description},
                                                       {"kind", std::string(data::to_string(task.kind))},
                                                       {"assignees", assignee_list(agents_)},
                                                       {"skills", format_skills(skills)},
                                                       {"state", data::snapshot(env).to_text()}})}};
  Plan plan = request_plan(std::move(messages), task, {task.id, "manager", "", env.now()});
  history_.log("plan", {{"task_id", task.id}, {"revision", plan.revision}, {"subtasks", plan.subtasks.size()}});
  return plan;
}

bool Planner::execute_subtask(Plan& plan, std::size_t index, const data::Task& task,
                              const std::vector<data::SkillEntry>& skills, sim::Environment& env, bool read_only,
                              const std::vector<Feedback>& extra_feedback) {
  Subtask& sub = plan.subtasks.at(index);
  if (sub.depends_on) {
    Subtask* dep = plan.find(*sub.depends_on);
    if (!dep || dep->status != SubtaskStatus::succeeded) {
      throw ContractViolation(sub.id + " depends on " + *sub.depends_on + ", which has not succeeded");
    }
  }
  std::optional<std::string> reported;
  shell::Context ctx;
  ctx.agents = agents_;
  ctx.agents.push_back("manager");
  ctx.read_only = read_only;
  ctx.on_report = [&](const shell::Report& r) { reported = r.message; };

  const std::string system = prompts::render(
      "agent_system", {{"agent", sub.assignee},
                       {"prometheus", std::string(kPrometheus)},
                       {"observation_rule", task.kind == data::TaskKind::observation
                                                ? "This is an observation task: never change the system state."
                                                : ""}});
  std::string dependency;
  if (sub.depends_on) {
    const Subtask* dep = plan.find(*sub.depends_on);
    dependency = "INPUT from " + dep->id + " (" + dep->assignee + "): " + dep->result.value_or("") + "\n";
  }
  std::string transcript;
  for (const auto& fb : extra_feedback) {
    transcript += "FEEDBACK (" + std::string(data::to_string(fb.kind)) + " from " + fb.source + "): " + fb.content + "\n";
  }

  const std::string digest_before = env.digest();
  sub.attempts = 0;
  sub.status = SubtaskStatus::pending;
  bool last_ok = false;
  bool final_turn = false;
  while (true) {
    if (sub.attempts >= config_.attempt_budget) {
      if (!last_ok || final_turn) break;
      final_turn = true;
      transcript += "NOTE: no attempts left; report your result with report_result now.\n";
    }
    const std::string turn = prompts::render(
        "agent_turn", {{"task_id", task.id},
                       {"task_description", task.description},
                       {"subtask_id", sub.id},
                       {"subtask_description", sub.description},
                       {"attempt", std::to_string(sub.attempts + 1)},
                       {"dependency", dependency},
                       {"skills", format_skills(skills)},
                       {"transcript", transcript.empty() ? "(nothing yet)\n" : transcript}});
    const llm::CallSite site{task.id, sub.assignee, sub.id, env.now()};
    const std::string completion = gateway_.complete(llm::Role::planner, {{"system", system}, {"user", turn}}, site);
    const std::string line = extract_command(completion);

    data::InteractionRecord cmd{0, task.id, sub.assignee, line, data::PayloadKind::command, std::nullopt, "", sub.id,
                                std::nullopt, env.now()};
    history_.append(cmd);
    reported.reset();
    shell::ExecutionResult res = shell::execute(line, env, ctx);
    data::InteractionRecord out{0, task.id, "environment", res.stdout_text + res.stderr_text,
                                data::PayloadKind::execution_result, std::nullopt, sub.assignee, sub.id, res.exit_code,
                                env.now()};
    history_.append(out);

    if (task.kind == data::TaskKind::observation && env.digest() != digest_before) {
      history_.log("observation_violation", {{"task_id", task.id},
                                             {"subtask", sub.id},
                                             {"command", line},
                                             {"digest_before", digest_before},
                                             {"digest_after", env.digest()}});
      throw ObservationViolation("observation task " + task.id + " changed the cluster state via: " + line);
    }

    if (res.ok() && reported) {
      sub.result = *reported;
      sub.status = SubtaskStatus::succeeded;
      data::InteractionRecord rep{0, task.id, sub.assignee, *reported, data::PayloadKind::report, std::nullopt,
                                  "manager", sub.id, std::nullopt, env.now()};
      history_.append(rep);
      return true;
    }
    ++sub.attempts;
    transcript += "$ " + line + "\n[exit " + std::to_string(res.exit_code) + "]\n" +
                  clip(res.stdout_text, kTranscriptOutputChars);
    if (!res.ok()) {
      Feedback fb{data::FeedbackKind::environment, "environment", sub.id, res.stderr_text};
      record_feedback(task, fb, env.now());
      transcript += "FEEDBACK (environment): " + res.stderr_text;
    }
    last_ok = res.ok();
  }
  sub.status = SubtaskStatus::failed;
  return false;
}

bool Planner::peer_handoff(Plan& plan, std::size_t from, std::size_t to, const data::Task& task,
                           const std::vector<data::SkillEntry>& skills, sim::Environment& env, bool read_only) {
  auto check = [&]() {
    const Subtask& up = plan.subtasks.at(from);
    const Subtask& down = plan.subtasks.at(to);
    if (!config_.model_judged_handoff) return matches_format(down.input_format, up.result.value_or(""));
    const std::string verdict = gateway_.complete(
        llm::Role::planner,
        {{"system", "ROLE: component agent\nAGENT " + down.assignee + "\nMODE: check-input"},
         {"user", "TASK " + task.id + "\nSUBTASK " + down.id + ": " + down.description + "\nExpected input: " +
                      down.input_format + "\nReceived from " + up.id + ": " + up.result.value_or("") +
                      "\nAnswer VERDICT: match or VERDICT: mismatch."}},
        {task.id, down.assignee, down.id, env.now()});
    return text::contains_ci(verdict, "VERDICT: match");
  };
  if (check()) return true;
  const std::string mismatch = plan.subtasks[to].assignee + " expected " + plan.subtasks[to].input_format +
                               " input from " + plan.subtasks[from].id + " but received: " +
                               plan.subtasks[from].result.value_or("");
  Feedback fb{data::FeedbackKind::peer, plan.subtasks[to].assignee, plan.subtasks[from].id, mismatch};
  record_feedback(task, fb, env.now());
  if (execute_subtask(plan, from, task, skills, env, read_only, {fb}) && check()) return true;

  const std::string escalation = "escalation: " + plan.subtasks[to].assignee + " still cannot use the result of " +
                                 plan.subtasks[from].id + " (" + plan.subtasks[from].result.value_or("no result") +
                                 "); expected " + plan.subtasks[to].input_format;
  data::InteractionRecord rep{0, task.id, plan.subtasks[to].assignee, escalation, data::PayloadKind::report,
                              std::nullopt, "manager", plan.subtasks[to].id, std::nullopt, env.now()};
  history_.append(rep);
  history_.log("escalation", {{"task_id", task.id}, {"from", plan.subtasks[from].id}, {"to", plan.subtasks[to].id}});
  return false;
}

Plan Planner::hierarchical_replan(const Plan& plan, Trigger trigger, const std::string& trigger_context,
                                  const data::Task& task, const std::vector<data::SkillEntry>& skills,
                                  const sim::Environment& env) {
  std::vector<llm::Message> messages{
      {"system", prompts::render("manager_replan", {{"task_id", task.id},
                                                    {"description", task.description},
                                                    {"kind", std::string(data::to_string(task.kind))},
                                                    {"trigger", std::string(to_string(trigger))},
                                                    {"revision", std::to_string(plan.revision + 1)},
                                                    {"trigger_context", trigger_context},
                                                    {"plan", describe_plan(plan)},
                                                    {"skills", format_skills(skills)},
                                                    {"assignees", assignee_list(agents_)}})}};
  Plan next = request_plan(std::move(messages), task, {task.id, "manager", "", env.now()});
  next.revision = plan.revision + 1;
  for (auto& s : next.subtasks) {
    for (const auto& old : plan.subtasks) {
      if (old.status == SubtaskStatus::succeeded && old.assignee == s.assignee && old.description == s.description &&
          !s.depends_on) {
        s.result = old.result;
        s.status = SubtaskStatus::succeeded;
        s.attempts = old.attempts;
      }
    }
  }
  std::string rationale;
  for (const auto& line : text::split_lines(last_plan_text_)) {
    if (text::starts_with_ci(text::trim(line), "RATIONALE:")) rationale = std::string(text::trim(text::trim(line).substr(10)));
  }
  std::string content = "revision " + std::to_string(next.revision) + " after " + std::string(to_string(trigger)) +
                        ": " + (rationale.empty() ? "re-planned" : rationale) + "\n" + describe_plan(next);
  record_feedback(task, {data::FeedbackKind::hierarchical, "manager", "plan", content}, env.now());
  history_.log("plan", {{"task_id", task.id}, {"revision", next.revision}, {"subtasks", next.subtasks.size()},
                        {"trigger", to_string(trigger)}});
  return next;
}

std::string Planner::assemble(Plan& plan, const data::Task& task, const sim::Environment& env) {
  if (!plan.all_succeeded()) throw ContractViolation("assemble requires every subtask to have succeeded");
  std::string results;
  for (const auto& s : plan.subtasks) results += "[" + s.id + " " + s.assignee + "] " + s.result.value_or("") + "\n";
  const std::string synthesis = gateway_.complete(
      llm::Role::planner,
      {{"system", prompts::render("manager_synthesize",
                                  {{"task_id", task.id}, {"description", task.description}, {"results", results}})}},
      {task.id, "manager", "", env.now()});
  bool success = false;
  for (const auto& line : text::split_lines(synthesis)) {
    auto t = text::trim(line);
    if (text::starts_with_ci(t, "VERDICT:")) success = text::to_lower(text::trim(t.substr(8))) == "success";
  }
  plan.status = success ? PlanStatus::complete : PlanStatus::failed;
  return results + synthesis;
}

TaskOutcome Planner::run(const data::Task& task, const std::vector<data::SkillEntry>& skills, sim::Environment& env,
                         bool read_only) {
  TaskOutcome outcome;
  try {
    outcome.plan = decompose(task, skills, env);
  } catch (const PlanningFailed& e) {
    outcome.failure_reason = std::string("planning failed: ") + e.what();
    return outcome;
  }
  Plan& plan = outcome.plan;
  int fruitless = 0;
  try {
    while (true) {
      std::optional<Trigger> trigger;
      std::string context;
      for (std::size_t i = 0; i < plan.subtasks.size() && !trigger; ++i) {
        if (plan.subtasks[i].status == SubtaskStatus::succeeded) continue;
        if (const auto& dep = plan.subtasks[i].depends_on) {
          std::size_t from = static_cast<std::size_t>(std::stoi(dep->substr(1)) - 1);
          if (!peer_handoff(plan, from, i, task, skills, env, read_only)) {
            trigger = Trigger::escalation;
            context = "escalation from " + plan.subtasks[i].assignee + ": " + plan.subtasks[from].id +
                      " result \"" + plan.subtasks[from].result.value_or("") + "\" does not match the expected " +
                      plan.subtasks[i].input_format + " input";
            break;
          }
        }
        if (execute_subtask(plan, i, task, skills, env, read_only)) {
          fruitless = 0;
        } else {
          const auto& s = plan.subtasks[i];
          trigger = Trigger::imbalance_report;
          context = s.id + " (" + s.assignee + ") failed after " + std::to_string(s.attempts) + " attempts: " +
                    s.description;
          for (auto it = history_.records().rbegin(); it != history_.records().rend(); ++it) {
            if (it->payload_kind == data::PayloadKind::feedback && it->task_id == task.id) {
              context += "\nlast feedback: " + it->payload;
              break;
            }
          }
        }
      }
      if (!trigger) break;
      if (fruitless >= config_.replan_budget) {
        plan.status = PlanStatus::failed;
        outcome.failure_reason = "re-planning budget exhausted after revision " + std::to_string(plan.revision);
        return outcome;
      }
      Plan next = hierarchical_replan(plan, *trigger, context, task, skills, env);
      plan = std::move(next);
      ++fruitless;
    }
  } catch (const PlanningFailed& e) {
    plan.status = PlanStatus::failed;
    outcome.failure_reason = std::string("re-planning failed: ") + e.what();
    return outcome;
  } catch (const ObservationViolation& e) {
    plan.status = PlanStatus::failed;
    outcome.violation = true;
    outcome.failure_reason = e.what();
    return outcome;
  }
  outcome.solution = assemble(plan, task, env);
  if (plan.status == PlanStatus::complete) {
    outcome.status = data::TaskStatus::succeeded;
  } else {
    outcome.failure_reason = "manager judged the assembled solution unsuccessful";
  }
  return outcome;
}

}  // namespace skillforge::planner
