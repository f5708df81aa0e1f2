#include "skillforge/curator/curator.hpp"

#include <algorithm>
#include <map>

#include "skillforge/core/prompts.hpp"
#include "skillforge/core/quantity.hpp"
#include "skillforge/core/text.hpp"
#include "skillforge/shell/gateway.hpp"

namespace skillforge::curator {
namespace {

constexpr std::size_t kOutputChars = 4000;

std::string clip(const std::string& s) {
  if (s.size() <= kOutputChars) return s;
  return s.substr(0, kOutputChars) + "\n...(truncated)";
}

std::map<std::string, std::string> parse_pairs(const std::string& value) {
  std::map<std::string, std::string> out;
  for (const auto& part : text::split(value, ',')) {
    auto eq = part.find('=');
    if (eq == std::string::npos) throw InvalidArgument("expected key=value, got \"" + part + "\"");
    out[std::string(text::trim(part.substr(0, eq)))] = std::string(text::trim(part.substr(eq + 1)));
  }
  return out;
}

std::string compare(std::string_view what, const std::string& claimed, const std::string& actual) {
  if (claimed == actual) return "";
  return std::string(what) + " is " + actual + ", not " + claimed;
}

std::string compare_cpu(std::string_view what, const std::string& claimed, std::int64_t actual) {
  if (quantity::parse_cpu_millis(claimed) == actual) return "";
  return std::string(what) + " is " + quantity::format_cpu(actual) + ", not " + claimed;
}

std::string compare_mem(std::string_view what, const std::string& claimed, std::int64_t actual) {
  if (quantity::parse_memory_bytes(claimed) == actual) return "";
  return std::string(what) + " is " + quantity::format_memory(actual) + ", not " + claimed;
}

std::string check_resources(const std::string& value, const sim::ResourceSpec& r) {
  auto pairs = parse_pairs(value);
  for (const auto& [key, v] : pairs) {
    auto slash = v.find('/');
    if (slash == std::string::npos) throw InvalidArgument("expected cpu/memory in \"" + v + "\"");
    const std::string cpu = v.substr(0, slash);
    const std::string mem = v.substr(slash + 1);
    std::string why;
    if (key == "requests") {
      why = compare_cpu("cpu request", cpu, r.cpu_request_m);
      if (why.empty()) why = compare_mem("memory request", mem, r.mem_request);
    } else if (key == "limits") {
      why = compare_cpu("cpu limit", cpu, r.cpu_limit_m);
      if (why.empty()) why = compare_mem("memory limit", mem, r.mem_limit);
    } else {
      throw InvalidArgument("unknown resources key \"" + key + "\"");
    }
    if (!why.empty()) return why;
  }
  return "";
}

std::string check_probes(const std::string& value, const std::vector<sim::ProbeSpec>& probes) {
  auto pairs = parse_pairs(value);
  std::optional<std::string> kind;
  if (auto it = pairs.find("kind"); it != pairs.end()) {
    kind = it->second;
    pairs.erase(it);
  }
  int seen = 0;
  for (const auto& p : probes) {
    const std::string pk(sim::to_string(p.kind));
    if (kind && *kind != pk) continue;
    ++seen;
    for (const auto& [key, v] : pairs) {
      std::string actual;
      if (key == "path") actual = p.http_path;
      else if (key == "port") actual = std::to_string(p.port);
      else if (key == "delay") actual = std::to_string(p.initial_delay);
      else if (key == "timeout") actual = std::to_string(p.timeout);
      else if (key == "period") actual = std::to_string(p.period);
      else if (key == "success") actual = std::to_string(p.success_threshold);
      else if (key == "failure") actual = std::to_string(p.failure_threshold);
      else throw InvalidArgument("unknown probe key \"" + key + "\"");
      std::string claimed = v;
      if (key != "path" && !claimed.empty() && claimed.back() == 's') claimed.pop_back();
      if (claimed != actual) return pk + " probe " + key + " is " + actual + ", not " + v;
    }
  }
  if (seen == 0) return "no " + kind.value_or("") + (kind ? " " : "") + "probe is configured";
  return "";
}

std::string join_command(const sim::Deployment& d) {
  std::string out = d.command;
  for (const auto& a : d.args) out += (out.empty() ? "" : " ") + a;
  return out;
}

const sim::Deployment* find_by_name(const sim::ClusterState& state, const std::string& name) {
  for (const auto& d : state.deployments) {
    if (d.name == name) return &d;
  }
  return nullptr;
}

}  // namespace

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::validated: return "validated";
    case Verdict::rejected: return "rejected";
    case Verdict::deferred: return "deferred";
  }
  return "deferred";
}

std::vector<std::string> parse_skills(const std::string& completion, std::vector<data::SkillEntry>& out) {
  out.clear();
  std::vector<std::string> issues;
  bool none = false;
  for (const auto& raw : text::split_lines(completion)) {
    std::string_view line = text::trim(raw);
    if (line.empty()) continue;
    if (line == "NONE" && out.empty()) {
      none = true;
      continue;
    }
    if (line == "SKILL" || text::starts_with_ci(line, "SKILL ")) {
      out.emplace_back();
      continue;
    }
    if (out.empty()) continue;
    auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    const std::string key = text::to_lower(text::trim(line.substr(0, colon)));
    const std::string value(text::trim(line.substr(colon + 1)));
    auto& e = out.back();
    if (key == "kind") {
      auto kind = data::parse_skill_kind(value);
      if (!kind) {
        issues.push_back("skill " + std::to_string(out.size()) + ": unknown kind \"" + value + "\"");
      } else {
        e.kind = *kind;
      }
    } else if (key == "body") {
      e.body = value;
    } else if (key == "description") {
      e.description = value;
    } else if (key == "subject") {
      e.subject = value;
    } else if (key == "value") {
      e.value = value;
    } else if (key == "check") {
      e.check = value;
    } else if (key == "cites") {
      for (const auto& part : text::split(value, ',')) {
        std::string id(text::trim(part));
        if (!id.empty() && id[0] == '#') id.erase(0, 1);
        auto n = text::parse_int(id);
        if (!n || *n < 1) {
          issues.push_back("skill " + std::to_string(out.size()) + ": bad record id \"" + part + "\"");
        } else {
          e.citations.push_back(static_cast<std::uint64_t>(*n));
        }
      }
    }
  }
  if (out.empty() && !none) issues.push_back("no SKILL blocks and no NONE");
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& e = out[i];
    const std::string where = "skill " + std::to_string(i + 1) + ": ";
    if (e.body.empty()) issues.push_back(where + "empty body");
    if (e.kind == data::SkillKind::command && e.description.empty()) issues.push_back(where + "a Command needs a description");
    if (e.kind == data::SkillKind::configuration && (e.subject.empty() || e.value.empty())) {
      issues.push_back(where + "a Configuration needs subject and value");
    }
    if (e.kind == data::SkillKind::reflection && e.citations.empty()) {
      issues.push_back(where + "a Reflection must cite record ids");
    }
  }
  return issues;
}

std::optional<std::string> check_configuration(const data::SkillEntry& entry, const sim::ClusterState& state) {
  auto dot = entry.subject.find('.');
  if (dot == std::string::npos) return std::nullopt;
  const sim::Deployment* d = find_by_name(state, entry.subject.substr(0, dot));
  if (!d) return "no deployment named " + entry.subject.substr(0, dot);
  const std::string field = entry.subject.substr(dot + 1);
  const std::string& v = entry.value;
  try {
    if (field == "image") return compare("image", v, d->image);
    if (field == "command") return compare("command", v, join_command(*d));
    if (field == "args") return compare("args", v, text::join(d->args, " "));
    if (field == "replicas") return compare("replicas", v, std::to_string(d->replicas));
    if (field == "resources") return check_resources(v, d->resources);
    if (field == "probes") return check_probes(v, d->probes);
    if (field == "cpu_request") return compare_cpu("cpu request", v, d->resources.cpu_request_m);
    if (field == "cpu_limit") return compare_cpu("cpu limit", v, d->resources.cpu_limit_m);
    if (field == "mem_request") return compare_mem("memory request", v, d->resources.mem_request);
    if (field == "mem_limit") return compare_mem("memory limit", v, d->resources.mem_limit);
    if (field.starts_with("label.")) {
      auto it = d->labels.find(field.substr(6));
      if (it == d->labels.end()) return "label " + field.substr(6) + " is not set";
      return compare("label " + field.substr(6), v, it->second);
    }
  } catch (const InvalidArgument& e) {
    return std::string("unreadable value: ") + e.what();
  }
  return std::nullopt;
}

std::string format_trajectory(const std::vector<data::InteractionRecord>& trajectory) {
  std::string out;
  for (const auto& r : trajectory) {
    out += "#" + std::to_string(r.id) + " " + r.actor + " " + std::string(data::to_string(r.payload_kind));
    if (r.feedback_kind) out += "/" + std::string(data::to_string(*r.feedback_kind));
    if (r.exit_code) out += " exit " + std::to_string(*r.exit_code);
    out += ": " + clip(r.payload) + "\n";
  }
  return out;
}

Curator::Curator(llm::Gateway& gateway, data::History& history, std::vector<std::string> agents, CuratorConfig config)
    : gateway_(gateway), history_(history), agents_(std::move(agents)), config_(config) {}

std::vector<data::SkillEntry> Curator::extract(const data::Task& task, const std::string& solution,
                                               const std::vector<data::InteractionRecord>& trajectory) {
  if (trajectory.empty()) return {};
  std::int64_t now = trajectory.back().timestamp;
  std::vector<llm::Message> messages{
      {"system", prompts::render("curator_extract", {{"task_id", task.id},
                                                     {"description", task.description},
                                                     {"solution", solution},
                                                     {"trajectory", format_trajectory(trajectory)}})}};
  std::vector<data::SkillEntry> entries;
  for (int asks = 0;; ++asks) {
    const std::string completion = gateway_.complete(llm::Role::curator, messages, {task.id, "curator", "", now});
    auto issues = parse_skills(completion, entries);
    if (issues.empty()) break;
    history_.log("extraction_rejected", {{"task_id", task.id}, {"issues", issues}});
    if (asks >= config_.reasks) return {};
    messages.push_back({"assistant", completion});
    messages.push_back({"user", "TASK " + task.id + "\nYour skills were rejected:\n- " + text::join(issues, "\n- ") +
                                    "\nAnswer again."});
  }

  std::vector<data::SkillEntry> kept;
  for (auto& e : entries) {
    if (e.kind == data::SkillKind::command) {
      bool seen = std::any_of(trajectory.begin(), trajectory.end(), [&](const data::InteractionRecord& r) {
        return r.payload_kind == data::PayloadKind::command && r.payload == e.body;
      });
      if (!seen) {
        history_.log("skill_dropped", {{"task_id", task.id}, {"body", e.body}, {"reason", "not a trajectory command"}});
        continue;
      }
    }
    e.source_task = task.id;
    kept.push_back(std::move(e));
  }
  return kept;
}

bool Curator::judge(const std::string& mode, const std::string& prompt, const std::string& task_id,
                    const std::string& accept, std::int64_t now) {
  const std::string answer = gateway_.complete(llm::Role::curator, {{"system", prompt}}, {task_id, "curator", "", now});
  for (const auto& line : text::split_lines(answer)) {
    auto t = text::trim(line);
    if (text::starts_with_ci(t, "VERDICT:")) return text::to_lower(text::trim(t.substr(8))) == accept;
  }
  history_.log("judgment_unreadable", {{"task_id", task_id}, {"mode", mode}});
  return false;
}

Validation Curator::validate(data::SkillEntry& entry, const sim::Environment* env,
                             const std::vector<data::InteractionRecord>& trajectory) {
  if (entry.validated) throw InvalidArgument("skill is already validated");
  if (!env) return {Verdict::deferred, "environment unavailable"};
  const std::int64_t now = env->now();
  shell::Context ctx;
  ctx.agents = agents_;
  ctx.agents.push_back("manager");
  ctx.on_report = [](const shell::Report&) {};

  switch (entry.kind) {
    case data::SkillKind::command: {
      bool seen = trajectory.empty() || std::any_of(trajectory.begin(), trajectory.end(), [&](const auto& r) {
                    return r.payload_kind == data::PayloadKind::command && r.payload == entry.body;
                  });
      if (!seen) return {Verdict::rejected, "command does not appear in the trajectory"};
      if (!shell::parses(entry.body)) return {Verdict::rejected, "command does not parse"};
      sim::Environment clone = *env;
      auto res = shell::execute(entry.body, clone, ctx);
      if (!res.ok()) {
        return {Verdict::rejected, "exit " + std::to_string(res.exit_code) + ": " + std::string(text::trim(res.stderr_text))};
      }
      const std::string prompt = prompts::render(
          "curator_verify_command", {{"task_id", entry.source_task},
                                     {"body", entry.body},
                                     {"description", entry.description},
                                     {"exit_code", std::to_string(res.exit_code)},
                                     {"output", clip(res.stdout_text)}});
      if (!judge("verify-command", prompt, entry.source_task, "match", now)) {
        return {Verdict::rejected, "output does not match the description"};
      }
      break;
    }
    case data::SkillKind::configuration: {
      if (auto why = check_configuration(entry, env->state())) {
        if (!why->empty()) return {Verdict::rejected, "mismatch: " + *why};
        break;
      }
      if (entry.check.empty()) return {Verdict::rejected, "no field mapping and no check command"};
      if (!shell::parses(entry.check)) return {Verdict::rejected, "check command does not parse"};
      sim::Environment clone = *env;
      ctx.read_only = true;
      auto res = shell::execute(entry.check, clone, ctx);
      if (!res.ok()) return {Verdict::rejected, "check command failed with exit " + std::to_string(res.exit_code)};
      const std::string prompt = prompts::render(
          "curator_verify_config", {{"task_id", entry.source_task},
                                    {"body", entry.body},
                                    {"subject", entry.subject},
                                    {"value", entry.value},
                                    {"check", entry.check},
                                    {"exit_code", std::to_string(res.exit_code)},
                                    {"output", clip(res.stdout_text)}});
      if (!judge("verify-config", prompt, entry.source_task, "match", now)) {
        return {Verdict::rejected, "observation does not confirm the value"};
      }
      break;
    }
    case data::SkillKind::reflection: {
      if (entry.citations.empty()) return {Verdict::rejected, "no citations"};
      std::vector<data::InteractionRecord> cited;
      for (auto id : entry.citations) {
        auto it = std::find_if(trajectory.begin(), trajectory.end(), [&](const auto& r) { return r.id == id; });
        if (it == trajectory.end()) {
          return {Verdict::rejected, "cites record #" + std::to_string(id) + " outside the trajectory"};
        }
        cited.push_back(*it);
      }
      const std::string prompt = prompts::render(
          "curator_verify_reflection",
          {{"task_id", entry.source_task}, {"body", entry.body}, {"records", format_trajectory(cited)}});
      if (!judge("verify-reflection", prompt, entry.source_task, "grounded", now)) {
        return {Verdict::rejected, "claims are not grounded in the cited records"};
      }
      break;
    }
  }
  entry.validated = true;
  return {Verdict::validated, ""};
}

Consolidation Curator::consolidate(const std::vector<data::SkillEntry>& entries, data::SkillLibrary& library) {
  Consolidation c;
  for (const auto& e : entries) {
    switch (library.store(e)) {
      case data::StoreOutcome::stored: ++c.stored; break;
      case data::StoreOutcome::merged: ++c.merged; break;
      case data::StoreOutcome::conflicted:
        ++c.stored;
        ++c.conflicted;
        break;
    }
  }
  return c;
}

CurationResult Curator::curate(const data::Task& task, const std::string& solution,
                               const std::vector<data::InteractionRecord>& trajectory, const sim::Environment* env,
                               data::SkillLibrary& library, int round, int trial) {
  CurationResult result;
  for (auto& e : extract(task, solution, trajectory)) {
    e.created_round = round;
    e.trial = trial;
    Validation v = validate(e, env, trajectory);
    if (v.verdict == Verdict::validated) {
      result.accepted.push_back(e);
    } else {
      history_.log("skill_rejected", {{"task_id", task.id},
                                      {"kind", data::to_string(e.kind)},
                                      {"body", e.body},
                                      {"verdict", to_string(v.verdict)},
                                      {"reason", v.reason}});
      result.rejected.emplace_back(e, v.reason);
    }
  }
  result.counts = consolidate(result.accepted, library);
  history_.log("consolidation", {{"task_id", task.id},
                                 {"stored", result.counts.stored},
                                 {"merged", result.counts.merged},
                                 {"conflicted", result.counts.conflicted}});
  return result;
}

}  // namespace skillforge::curator
